#include <cmath>
#include <vector>

#include "doctest.h"
#include "textctrl/core/adam.hpp"
#include "textctrl/core/nn.hpp"
#include "textctrl/core/ops.hpp"
#include "textctrl/core/serialize.hpp"

using namespace textctrl;
namespace op = textctrl::ops;

namespace {

Tensor randt(Shape s, uint64_t seed, float lo = -1.0f, float hi = 1.0f) {
    Tensor t(s);
    Rng r(seed);
    for (int64_t i = 0; i < t.numel(); ++i) t.data()[i] = float(r.uniform(lo, hi));
    return t;
}

// central-difference check of d(loss)/d(input) for every input element
template <class F>
void check_grads(std::vector<Tensor> xs, F f, float h = 1e-3f, float tol = 2e-2f) {
    Tape tape;
    std::vector<Var> vs;
    for (auto& x : xs) vs.push_back(tape.leaf(x.clone(), true));
    Var loss = f(tape, vs);
    tape.backward(loss);
    std::vector<Tensor> grads;
    for (auto& v : vs) grads.push_back(tape.grad(v).clone());

    for (size_t k = 0; k < xs.size(); ++k) {
        for (int64_t i = 0; i < xs[k].numel(); ++i) {
            auto eval = [&](float delta) {
                Tape t2(false);
                std::vector<Var> ws;
                for (size_t j = 0; j < xs.size(); ++j) {
                    Tensor c = xs[j].clone();
                    if (j == k) c.data()[i] += delta;
                    ws.push_back(t2.leaf(c));
                }
                return f(t2, ws).val().item();
            };
            float fd = (eval(h) - eval(-h)) / (2.0f * h);
            float an = grads[k].data()[i];
            float denom = std::max({1.0f, std::fabs(fd), std::fabs(an)});
            INFO("input ", k, " elem ", i, " fd=", fd, " an=", an);
            CHECK(std::fabs(fd - an) / denom < tol);
        }
    }
}

// same, over a ParamStore-built model; strided element subset for big params
template <class F>
void check_param_grads(ParamStore& ps, F f, float h = 1e-2f, float tol = 3e-2f,
                       int max_per_param = 8) {
    ps.zero_grads();
    {
        Tape t;
        t.backward(f(t));
    }
    for (auto& [name, p] : ps) {
        if (!p.trainable) continue;
        Tensor g = p.grad.defined() ? p.grad.clone() : Tensor(p.value.shape());
        int64_t n = p.value.numel();
        int64_t stride = std::max<int64_t>(1, n / max_per_param);
        for (int64_t i = 0; i < n; i += stride) {
            float orig = p.value.data()[i];
            p.value.data()[i] = orig + h;
            Tape t1(false);
            float fp = f(t1).val().item();
            p.value.data()[i] = orig - h;
            Tape t2(false);
            float fm = f(t2).val().item();
            p.value.data()[i] = orig;
            float fd = (fp - fm) / (2.0f * h);
            float an = g.data()[i];
            float denom = std::max({1.0f, std::fabs(fd), std::fabs(an)});
            INFO(name, " elem ", i, " fd=", fd, " an=", an);
            CHECK(std::fabs(fd - an) / denom < tol);
        }
    }
}

} // namespace

TEST_CASE("elementwise forward values") {
    Tape t;
    Var a = t.leaf(Tensor::from({2, 2}, {1, 2, 3, 4}));
    Var b = t.leaf(Tensor::from({2, 2}, {5, 6, 7, 8}));
    CHECK(op::add(a, b).val().at(3) == 12.0f);
    CHECK(op::sub(a, b).val().at(0) == -4.0f);
    CHECK(op::mul(a, b).val().at(2) == 21.0f);
    CHECK(op::div(b, a).val().at(1) == 3.0f);
    CHECK(op::smul(a, 2.5f).val().at(1) == 5.0f);
    CHECK(op::square(a).val().at(3) == 16.0f);
}

TEST_CASE("matmul against hand result") {
    Tape t;
    Var a = t.leaf(Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6}));
    Var b = t.leaf(Tensor::from({3, 2}, {7, 8, 9, 10, 11, 12}));
    Tensor c = op::matmul(a, b).val();  // [[58,64],[139,154]]
    CHECK(c.at(0) == 58.0f);
    CHECK(c.at(1) == 64.0f);
    CHECK(c.at(2) == 139.0f);
    CHECK(c.at(3) == 154.0f);
    // nt and tn agree with explicit transposes
    Var bt = op::transpose(b);
    Tensor c2 = op::matmul_nt(a, bt).val();
    for (int i = 0; i < 4; ++i) CHECK(c2.at(i) == c.at(i));
    Var at = op::transpose(a);
    Tensor c3 = op::matmul_tn(at, b).val();
    for (int i = 0; i < 4; ++i) CHECK(c3.at(i) == c.at(i));
}

TEST_CASE("softmax rows sum to one and match direct eval") {
    Tape t;
    Var x = t.leaf(randt({3, 5}, 11, -4.0f, 4.0f));
    Tensor p = op::softmax_rows(x).val();
    for (int i = 0; i < 3; ++i) {
        double s = 0;
        for (int j = 0; j < 5; ++j) s += p.at(i * 5 + j);
        CHECK(s == doctest::Approx(1.0).epsilon(1e-5));
    }
    Tensor lp = op::log_softmax_rows(x).val();
    for (int64_t i = 0; i < p.numel(); ++i)
        CHECK(std::exp(lp.at(i)) == doctest::Approx(p.at(i)).epsilon(1e-4));
}

TEST_CASE("masked cross entropy matches hand computation") {
    // two rows; second row masked out
    Tape t;
    Var logits = t.leaf(Tensor::from({2, 3}, {0.5f, -0.2f, 1.0f, 3.0f, 0.0f, -1.0f}));
    float l = op::cross_entropy_masked(logits, {2, 0}, {1.0f, 0.0f}).val().item();
    double z = std::exp(0.5) + std::exp(-0.2) + std::exp(1.0);
    CHECK(l == doctest::Approx(float(-std::log(std::exp(1.0) / z))).epsilon(1e-5));
}

TEST_CASE("gradients: elementwise and activations") {
    Tensor a = randt({3, 4}, 1, 0.3f, 1.7f);  // positive, away from kinks
    Tensor b = randt({3, 4}, 2, 0.4f, 1.9f);
    check_grads({a, b}, [](Tape&, const std::vector<Var>& v) {
        Var x = op::mul(op::add(v[0], v[1]), op::sub(v[0], v[1]));
        x = op::add(x, op::div(v[0], v[1]));
        return op::vsum(op::square(x));
    });
    check_grads({a}, [](Tape&, const std::vector<Var>& v) {
        Var x = op::silu(v[0]);
        x = op::add(x, op::gelu(v[0]));
        x = op::add(x, op::sigmoid(v[0]));
        x = op::mul(x, op::exp(op::smul(v[0], 0.3f)));
        x = op::add(x, op::log(v[0]));
        x = op::add(x, op::sqrt(v[0]));
        x = op::add(x, op::rsqrt(v[0], 0.1f));
        return op::vmean(x);
    });
    check_grads({randt({2, 3}, 3, 0.2f, 1.0f)}, [](Tape&, const std::vector<Var>& v) {
        return op::vsum(op::add(op::relu(v[0]), op::abs(v[0])));
    });
}

TEST_CASE("gradients: broadcasts") {
    Tensor x = randt({3, 4}, 4);
    Tensor vr = randt({4}, 5);
    Tensor vc = randt({3}, 6);
    check_grads({x, vr, vc}, [](Tape&, const std::vector<Var>& v) {
        Var y = op::add_row(v[0], v[1]);
        y = op::mul_row(y, v[1]);
        y = op::add_col(y, v[2]);
        y = op::mul_col(y, v[2]);
        return op::vsum(op::square(y));
    });
    Tensor img = randt({2, 3, 2, 2}, 7);
    Tensor ch = randt({3}, 8, 0.5f, 1.5f);
    check_grads({img, ch}, [](Tape&, const std::vector<Var>& v) {
        return op::vsum(op::square(op::add_chan(op::mul_chan(v[0], v[1]), v[1])));
    });
}

TEST_CASE("gradients: matmul family") {
    Tensor a = randt({3, 4}, 9);
    Tensor b = randt({4, 2}, 10);
    Tensor c = randt({2, 4}, 11);
    Tensor d = randt({3, 2}, 12);
    check_grads({a, b, c, d}, [](Tape&, const std::vector<Var>& v) {
        Var x = op::matmul(v[0], v[1]);          // [3,2]
        Var y = op::matmul_nt(v[0], v[2]);       // [3,2]
        Var z = op::matmul_tn(v[3], v[0]);       // [2,4]
        return op::add(op::vsum(op::square(op::add(x, y))), op::vsum(op::square(z)));
    });
}

TEST_CASE("gradients: shape ops and reductions") {
    Tensor x = randt({3, 4}, 13);
    Tensor y = randt({2, 4}, 14);
    check_grads({x, y}, [](Tape&, const std::vector<Var>& v) {
        Var r = op::reshape(v[0], Shape({2, 6}));
        Var tr = op::transpose(r);                       // [6,2]
        Var s = op::slice_rows(tr, 1, 5);                // [4,2]
        Var cc = op::concat_cols({s, op::transpose(v[1])});  // [4,2]+[4,2] -> [4,4]
        Var rr = op::concat_rows({cc, op::slice_cols(cc, 0, 4)});
        Var sums = op::add(op::vsum(op::square(op::rowsum(rr))), op::vsum(op::square(op::colsum(rr))));
        return op::add(op::vmean(sums), op::vsum(op::square(op::slice_cols(rr, 1, 3))));
    });
}

TEST_CASE("gradients: softmax, log-softmax, cross entropy") {
    Tensor x = randt({3, 5}, 15, -2.0f, 2.0f);
    Tensor w = randt({3, 5}, 16);
    check_grads({x, w}, [](Tape&, const std::vector<Var>& v) {
        return op::vsum(op::mul(op::softmax_rows(v[0]), v[1]));
    });
    check_grads({x, w}, [](Tape&, const std::vector<Var>& v) {
        return op::vsum(op::mul(op::log_softmax_rows(v[0]), v[1]));
    });
    check_grads({x}, [](Tape&, const std::vector<Var>& v) {
        return op::cross_entropy_masked(v[0], {1, 4, 0}, {1.0f, 0.0f, 1.0f});
    });
}

TEST_CASE("gradients: embedding") {
    Tensor tab = randt({6, 3}, 17);
    check_grads({tab}, [](Tape&, const std::vector<Var>& v) {
        // id 2 repeats: scatter-add must accumulate
        Var e = op::embedding(v[0], {2, 5, 2, 0});
        return op::vsum(op::square(e));
    });
}

TEST_CASE("gradients: conv2d, resizes, pooling") {
    Tensor x = randt({2, 2, 5, 6}, 18);
    Tensor w = randt({3, 2, 3, 3}, 19, -0.5f, 0.5f);
    Tensor b = randt({3}, 20);
    check_grads({x, w, b}, [](Tape&, const std::vector<Var>& v) {
        Var y = op::conv2d(v[0], v[1], v[2], 2, 1);  // -> [2,3,3,3]
        return op::vmean(op::square(y));
    }, 1e-2f, 3e-2f);
    check_grads({x}, [](Tape&, const std::vector<Var>& v) {
        Var up = op::resize_bilinear(v[0], 7, 9);
        Var dn = op::resize_nearest(up, 3, 4);
        return op::vsum(op::square(dn));
    });
    check_grads({x}, [](Tape&, const std::vector<Var>& v) {
        return op::vsum(op::square(op::avgpool_bins(v[0], 2, 3)));
    });
}

TEST_CASE("gradients: layernorm, groupnorm, adain") {
    Tensor x = randt({4, 6}, 21);
    Tensor g = randt({6}, 22, 0.5f, 1.5f);
    Tensor b = randt({6}, 23);
    check_grads({x, g, b}, [](Tape&, const std::vector<Var>& v) {
        return op::vsum(op::square(op::layernorm(v[0], v[1], v[2])));
    }, 1e-2f, 3e-2f);

    Tensor img = randt({2, 4, 3, 3}, 24);
    Tensor cg = randt({4}, 25, 0.5f, 1.5f);
    Tensor cb = randt({4}, 26);
    check_grads({img, cg, cb}, [](Tape&, const std::vector<Var>& v) {
        return op::vsum(op::square(op::groupnorm(v[0], 2, v[1], v[2])));
    }, 1e-2f, 3e-2f);

    Tensor sm = randt({2, 4}, 27);
    Tensor ss = randt({2, 4}, 28, 0.5f, 1.5f);
    check_grads({img, sm, ss}, [](Tape&, const std::vector<Var>& v) {
        return op::vsum(op::square(op::adain(v[0], v[1], v[2])));
    }, 1e-2f, 3e-2f);
}

TEST_CASE("adain output carries the requested stats") {
    Tape t;
    Var c = t.leaf(randt({1, 2, 4, 8}, 29));
    Var m = t.leaf(Tensor::from({1, 2}, {0.3f, -0.7f}));
    Var s = t.leaf(Tensor::from({1, 2}, {2.0f, 0.5f}));
    Tensor y = op::adain(c, m, s).val();
    for (int ch = 0; ch < 2; ++ch) {
        double mean = 0, var = 0;
        const float* p = y.data() + ch * 32;
        for (int i = 0; i < 32; ++i) mean += p[i];
        mean /= 32;
        for (int i = 0; i < 32; ++i) var += (p[i] - mean) * (p[i] - mean);
        var /= 32;
        CHECK(mean == doctest::Approx(ch == 0 ? 0.3 : -0.7).epsilon(1e-3));
        CHECK(std::sqrt(var) == doctest::Approx(ch == 0 ? 2.0 : 0.5).epsilon(1e-2));
    }
}

TEST_CASE("grad accumulates when a value fans out") {
    Tape t;
    Var x = t.leaf(Tensor::from({2}, {3.0f, -1.0f}), true);
    Var y = op::add(op::mul(x, x), x);  // x^2 + x -> grad 2x+1
    t.backward(op::vsum(y));
    CHECK(t.grad(x).at(0) == doctest::Approx(7.0f));
    CHECK(t.grad(x).at(1) == doctest::Approx(-1.0f));
}

TEST_CASE("param binding accumulates into store and adam moves weights") {
    ParamStore ps;
    Param& p = ps.create("w", Shape({2}), nn::init::constant(2.0f), 0);
    {
        Tape t;
        Var w = t.param(p);
        t.backward(op::vsum(op::square(w)));  // d/dw = 2w = 4
    }
    CHECK(p.grad.at(0) == doctest::Approx(4.0f));
    {
        Tape t;
        Var w = t.param(p);
        t.backward(op::vsum(op::square(w)));
    }
    CHECK(p.grad.at(0) == doctest::Approx(8.0f));  // not zeroed between passes

    ps.zero_grads();
    {
        Tape t;
        t.backward(op::vsum(op::square(t.param(p))));
    }
    Adam opt(AdamConfig{.lr = 0.1f});
    float norm = opt.step(ps);
    CHECK(norm == doctest::Approx(std::sqrt(32.0f)).epsilon(1e-4));
    CHECK(p.value.at(0) < 2.0f);  // moved downhill
}

TEST_CASE("inference tape keeps no graph") {
    Tape t(false);
    Var x = t.leaf(randt({4, 4}, 30), true);
    Var y = op::matmul(x, x);
    CHECK(!t.needs_grad(y));
}

TEST_CASE("mha and transformer block gradcheck") {
    ParamStore ps;
    nn::TransformerBlock blk(ps, "blk", 8, 2, 42);
    Tensor x = randt({5, 8}, 31);
    check_param_grads(ps, [&](Tape& t) {
        Var v = t.leaf(x.clone());
        return op::vmean(op::square(blk(t, v)));
    }, 1e-2f, 4e-2f, 6);
}

TEST_CASE("attention kv blending matches manual mix") {
    ParamStore ps;
    nn::Mha attn(ps, "a", 8, 2, 7);
    Tensor x1 = randt({4, 8}, 32), x2 = randt({4, 8}, 33);
    nn::AttnCtrl ctrl;
    Tape t(false);
    Var v1 = t.leaf(x1.clone()), v2 = t.leaf(x2.clone());

    ctrl.start_record();
    attn(t, v1, v1, &ctrl);
    CHECK(ctrl.ks.size() == 1);

    // lambda = 1 reproduces source K/V exactly: output equals attn over
    // (Q from x2, K/V from x1)
    ctrl.start_blend(1.0f);
    Tensor blended = attn(t, v2, v2, &ctrl).val();
    Tensor crossed = attn(t, v2, v1).val();
    for (int64_t i = 0; i < blended.numel(); ++i)
        CHECK(blended.at(i) == doctest::Approx(crossed.at(i)).epsilon(1e-5));

    // lambda = 0 leaves the pass untouched
    ctrl.start_blend(0.0f);
    Tensor same = attn(t, v2, v2, &ctrl).val();
    Tensor plain = attn(t, v2, v2).val();
    for (int64_t i = 0; i < same.numel(); ++i)
        CHECK(same.at(i) == doctest::Approx(plain.at(i)).epsilon(1e-5));
}

TEST_CASE("checkpoint round trip with adam state") {
    ParamStore ps;
    ps.create("a.w", Shape({3, 2}), nn::init::normal(1.0f), 5);
    ps.create("b", Shape({4}), nn::init::uniform(2.0f), 6);
    {
        Tape t;
        Var loss = op::vsum(op::square(t.param(ps, "a.w")));
        t.backward(op::add(loss, op::vsum(op::square(t.param(ps, "b")))));
    }
    Adam opt;
    opt.step(ps);
    save_checkpoint("ckpt_test.bin", ps, true, uint64_t(opt.steps()));

    ParamStore loaded;
    uint64_t step = load_checkpoint("ckpt_test.bin", loaded);
    CHECK(step == 1);
    CHECK(loaded.size() == 2);
    for (auto& [name, p] : ps) {
        const Param& q = loaded.get(name);
        REQUIRE(q.value.shape() == p.value.shape());
        for (int64_t i = 0; i < p.value.numel(); ++i) {
            CHECK(q.value.at(i) == p.value.at(i));
            CHECK(q.adam_m.at(i) == p.adam_m.at(i));
            CHECK(q.adam_v.at(i) == p.adam_v.at(i));
        }
    }
    std::remove("ckpt_test.bin");
}

TEST_CASE("rng determinism and distribution sanity") {
    Rng a(123), b(123);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(123), d(124);
    CHECK(c.next_u64() != d.next_u64());

    Rng r(7);
    double mean = 0, var = 0;
    const int n = 20000;
    std::vector<double> xs(n);
    for (int i = 0; i < n; ++i) {
        xs[i] = r.normal();
        mean += xs[i];
    }
    mean /= n;
    for (int i = 0; i < n; ++i) var += (xs[i] - mean) * (xs[i] - mean);
    var /= n;
    CHECK(std::fabs(mean) < 0.03);
    CHECK(var == doctest::Approx(1.0).epsilon(0.05));

    // below() stays in range and hits both ends eventually
    Rng u(9);
    bool lo = false, hi = false;
    for (int i = 0; i < 1000; ++i) {
        uint64_t v = u.below(7);
        CHECK(v < 7);
        lo = lo || v == 0;
        hi = hi || v == 6;
    }
    CHECK(lo);
    CHECK(hi);
}
