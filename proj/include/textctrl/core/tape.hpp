#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "textctrl/core/rng.hpp"
#include "textctrl/core/tensor.hpp"

namespace textctrl {

struct Param {
    Tensor value;
    Tensor grad;    // accumulated across steps until zeroed
    Tensor adam_m;  // optimizer state, allocated on first update
    Tensor adam_v;
    bool trainable = true;
};

// Named parameter collection. std::map keeps iteration order stable so
// serialization and gradient reductions are deterministic.
class ParamStore {
public:
    using InitFn = std::function<void(Tensor&, Rng&)>;

    // Creates and initializes the param, or returns the existing one (e.g.
    // loaded from a checkpoint before the model was built) after a shape check.
    Param& create(const std::string& name, Shape shape, const InitFn& init, uint64_t seed) {
        if (auto it = map_.find(name); it != map_.end()) {
            TC_CHECK(it->second.value.shape() == shape,
                     "param " + name + " shape mismatch: stored " +
                         it->second.value.shape().str() + " vs requested " + shape.str());
            return it->second;
        }
        Param p;
        p.value = Tensor(shape);
        Rng rng(seed ^ hash64(name.c_str()));
        init(p.value, rng);
        auto [it, ok] = map_.emplace(name, std::move(p));
        return it->second;
    }

    bool has(const std::string& name) const { return map_.count(name) != 0; }
    Param& get(const std::string& name) {
        auto it = map_.find(name);
        TC_CHECK(it != map_.end(), "unknown param " + name);
        return it->second;
    }
    const Param& get(const std::string& name) const {
        auto it = map_.find(name);
        TC_CHECK(it != map_.end(), "unknown param " + name);
        return it->second;
    }
    Tensor& value(const std::string& name) { return get(name).value; }

    void zero_grads() {
        for (auto& [k, p] : map_)
            if (p.grad.defined()) p.grad.zero_();
    }
    void set_trainable(bool t) {
        for (auto& [k, p] : map_) p.trainable = t;
    }

    auto begin() { return map_.begin(); }
    auto end() { return map_.end(); }
    auto begin() const { return map_.begin(); }
    auto end() const { return map_.end(); }
    size_t size() const { return map_.size(); }

    int64_t param_count() const {
        int64_t n = 0;
        for (auto& [k, p] : map_) n += p.value.numel();
        return n;
    }

private:
    std::map<std::string, Param> map_;
};

class Tape;

struct Var {
    int id = -1;
    Tape* tape = nullptr;

    bool defined() const { return tape != nullptr && id >= 0; }
    const Tensor& val() const;
    const Shape& shape() const;
    int dim() const { return shape().ndim(); }
};

// Reverse-mode tape. Nodes are appended in forward order (a valid topological
// order); backward() walks them in reverse, handing each op its output
// gradient and parent list. One tape per forward pass.
class Tape {
public:
    using BackwardFn = std::function<void(Tape&, const Tensor&, const std::vector<Var>&)>;

    explicit Tape(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

    bool grad_enabled() const { return grad_enabled_; }

    Var leaf(Tensor value, bool needs_grad = false) {
        return make(std::move(value), grad_enabled_ && needs_grad, {}, {});
    }
    Var constant(Tensor value) { return make(std::move(value), false, {}, {}); }

    // Binds a stored parameter: the leaf's gradient is added into p.grad by
    // backward(). The value is shared, not copied.
    Var param(Param& p) {
        bool ng = grad_enabled_ && p.trainable;
        Var v = make(p.value, ng, {}, {});
        if (ng) {
            nodes_[size_t(v.id)].bound = true;
            bindings_.push_back({v.id, &p});
        }
        return v;
    }
    Var param(ParamStore& ps, const std::string& name) { return param(ps.get(name)); }

    // Registers an op result. The backward closure is dropped up front when no
    // input needs gradients, so inference passes carry no graph.
    Var op(Tensor value, std::vector<Var> parents, BackwardFn backward) {
        bool need = false;
        if (grad_enabled_)
            for (const Var& p : parents) {
                TC_CHECK(p.tape == this, "op: parent from another tape");
                need = need || nodes_[size_t(p.id)].needs_grad;
            }
        if (!need) return make(std::move(value), false, {}, {});
        return make(std::move(value), true, std::move(parents), std::move(backward));
    }

    const Tensor& val(int id) const { return nodes_[size_t(id)].value; }
    const Tensor& value(Var v) const { return nodes_[size_t(v.id)].value; }
    bool needs_grad(Var v) const { return nodes_[size_t(v.id)].needs_grad; }

    // Adds g into v's gradient accumulator. No-op when v carries no gradient,
    // so op backwards can emit grads for every parent unconditionally.
    void accum_grad(Var v, const Tensor& g) {
        Node& n = nodes_[size_t(v.id)];
        if (!n.needs_grad) return;
        TC_CHECK(g.shape() == n.value.shape(),
                 "accum_grad: shape mismatch " + g.shape().str() + " vs " + n.value.shape().str());
        if (!n.grad.defined()) {
            n.grad = g.clone();
            return;
        }
        float* dst = n.grad.data();
        const float* src = g.data();
        for (int64_t k = 0; k < g.numel(); ++k) dst[k] += src[k];
    }

    const Tensor& grad(Var v) {
        Node& n = nodes_[size_t(v.id)];
        if (!n.grad.defined()) n.grad = Tensor(n.value.shape());
        return n.grad;
    }

    void backward(Var loss) {
        TC_CHECK(loss.tape == this, "backward: var from another tape");
        TC_CHECK(loss.val().numel() == 1, "backward: loss must be scalar");
        TC_CHECK(grad_enabled_, "backward: tape built with grads disabled");
        {
            Node& n = nodes_[size_t(loss.id)];
            TC_CHECK(n.needs_grad, "backward: loss does not depend on any trainable input");
            if (!n.grad.defined()) n.grad = Tensor(n.value.shape());
            n.grad.fill_(1.0f);
        }
        for (int i = loss.id; i >= 0; --i) {
            Node& n = nodes_[size_t(i)];
            bool interior = !n.parents.empty();
            if (n.needs_grad && n.grad.defined() && n.backward)
                n.backward(*this, n.grad, n.parents);
            // consumers all ran already; free interior grads, keep leaf grads
            // for callers (and for the param-binding sweep below)
            n.backward = nullptr;
            n.parents.clear();
            if (interior && !n.bound) n.grad = Tensor();
        }
        for (auto& [id, p] : bindings_) {
            Node& n = nodes_[size_t(id)];
            if (!n.grad.defined()) continue;
            if (!p->grad.defined()) p->grad = Tensor(p->value.shape());
            float* dst = p->grad.data();
            const float* src = n.grad.data();
            for (int64_t k = 0; k < n.grad.numel(); ++k) dst[k] += src[k];
        }
    }

    size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        bool needs_grad = false;
        bool bound = false;
        std::vector<Var> parents;
        BackwardFn backward;
    };

    Var make(Tensor value, bool needs_grad, std::vector<Var> parents, BackwardFn bw) {
        nodes_.push_back(Node{std::move(value), Tensor(), needs_grad, false,
                              std::move(parents), std::move(bw)});
        return Var{int(nodes_.size()) - 1, this};
    }

    std::vector<Node> nodes_;
    std::vector<std::pair<int, Param*>> bindings_;
    bool grad_enabled_ = true;
};

inline const Tensor& Var::val() const { return tape->val(id); }
inline const Shape& Var::shape() const { return val().shape(); }

} // namespace textctrl
