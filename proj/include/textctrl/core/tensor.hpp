#pragma once

#include <cstdint>
#include <cstring>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace textctrl {

#define TC_CHECK(cond, msg)                                                  \
    do {                                                                     \
        if (!(cond)) throw std::runtime_error(std::string("textctrl: ") + (msg)); \
    } while (0)

struct Shape {
    std::vector<int> d;

    Shape() = default;
    Shape(std::initializer_list<int> dims) : d(dims) {}
    explicit Shape(std::vector<int> dims) : d(std::move(dims)) {}

    int ndim() const { return int(d.size()); }
    int operator[](int i) const { return d[size_t(i)]; }
    int64_t numel() const {
        int64_t n = 1;
        for (int x : d) n *= x;
        return n;
    }
    bool operator==(const Shape& o) const { return d == o.d; }
    bool operator!=(const Shape& o) const { return d != o.d; }

    std::string str() const {
        std::string s = "[";
        for (size_t i = 0; i < d.size(); ++i) s += (i ? "," : "") + std::to_string(d[i]);
        return s + "]";
    }
};

// Dense float32 tensor, contiguous row-major. Copies share storage; ops
// allocate fresh outputs and never mutate inputs.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape s) : shape_(std::move(s)) {
        buf_ = std::make_shared<std::vector<float>>(size_t(shape_.numel()), 0.0f);
    }
    Tensor(Shape s, std::shared_ptr<std::vector<float>> buf) : shape_(std::move(s)), buf_(std::move(buf)) {}

    static Tensor zeros(Shape s) { return Tensor(std::move(s)); }
    static Tensor full(Shape s, float v) {
        Tensor t(std::move(s));
        std::fill(t.buf_->begin(), t.buf_->end(), v);
        return t;
    }
    static Tensor scalar(float v) { return full(Shape{1}, v); }
    static Tensor from(Shape s, std::vector<float> data) {
        TC_CHECK(int64_t(data.size()) == s.numel(), "tensor data size mismatch for " + s.str());
        return Tensor(std::move(s), std::make_shared<std::vector<float>>(std::move(data)));
    }

    bool defined() const { return buf_ != nullptr; }
    const Shape& shape() const { return shape_; }
    int dim(int i) const { return shape_[i]; }
    int64_t numel() const { return shape_.numel(); }

    float* data() { return buf_->data(); }
    const float* data() const { return buf_->data(); }
    float& at(int64_t i) { return (*buf_)[size_t(i)]; }
    float at(int64_t i) const { return (*buf_)[size_t(i)]; }
    float item() const {
        TC_CHECK(numel() == 1, "item() on non-scalar " + shape_.str());
        return (*buf_)[0];
    }

    // Same storage, new shape.
    Tensor reshaped(Shape s) const {
        TC_CHECK(s.numel() == numel(), "reshape " + shape_.str() + " -> " + s.str());
        return Tensor(std::move(s), buf_);
    }

    Tensor clone() const {
        Tensor t(shape_);
        std::memcpy(t.data(), data(), size_t(numel()) * sizeof(float));
        return t;
    }

    void fill_(float v) { std::fill(buf_->begin(), buf_->end(), v); }
    void zero_() { fill_(0.0f); }

    bool same_storage(const Tensor& o) const { return buf_ == o.buf_; }

private:
    Shape shape_;
    std::shared_ptr<std::vector<float>> buf_;
};

} // namespace textctrl
