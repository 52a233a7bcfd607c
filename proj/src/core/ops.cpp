#include "textctrl/core/ops.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <cstring>

namespace textctrl::ops {

using EMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Map = Eigen::Map<EMat>;
using CMap = Eigen::Map<const EMat>;

namespace {

void check_same(const Var& a, const Var& b, const char* op) {
  TC_CHECK(a.shape() == b.shape(),
           std::string(op) + ": shape mismatch " + a.shape().str() + " vs " + b.shape().str());
}

// rows*cols factorization of an arbitrary-rank tensor with the last dim as cols
std::pair<int, int> as2d(const Shape& s) {
  TC_CHECK(s.ndim() >= 1, "as2d: rank 0");
  int c = s[s.ndim() - 1];
  int r = 1;
  for (int i = 0; i + 1 < s.ndim(); ++i) r *= s[i];
  return {r, c};
}

} // namespace

Var add(Var a, Var b) {
  check_same(a, b, "add");
  Tensor out = a.val().clone();
  const float* pb = b.val().data();
  float* po = out.data();
  for (int64_t i = 0; i < out.numel(); ++i) po[i] += pb[i];
  return a.tape->op(out, {a, b}, [](Tape& t, const Tensor& g, const std::vector<Var>& ps) {
    t.accum_grad(ps[0], g);
    t.accum_grad(ps[1], g);
  });
}

Var sub(Var a, Var b) {
  check_same(a, b, "sub");
  Tensor out = a.val().clone();
  const float* pb = b.val().data();
  float* po = out.data();
  for (int64_t i = 0; i < out.numel(); ++i) po[i] -= pb[i];
  return a.tape->op(out, {a, b}, [](Tape& t, const Tensor& g, const std::vector<Var>& ps) {
    t.accum_grad(ps[0], g);
    Tensor ng = g.clone();
    float* p = ng.data();
    for (int64_t i = 0; i < ng.numel(); ++i) p[i] = -p[i];
    t.accum_grad(ps[1], ng);
  });
}

Var mul(Var a, Var b) {
  check_same(a, b, "mul");
  Tensor out = a.val().clone();
  const float* pb = b.val().data();
  float* po = out.data();
  for (int64_t i = 0; i < out.numel(); ++i) po[i] *= pb[i];
  return a.tape->op(out, {a, b}, [](Tape& t, const Tensor& g, const std::vector<Var>& ps) {
    const Tensor& av = t.value(ps[0]);
    const Tensor& bv = t.value(ps[1]);
    Tensor ga = Tensor::zeros(av.shape()), gb = Tensor::zeros(bv.shape());
    const float* pg = g.data();
    for (int64_t i = 0; i < g.numel(); ++i) {
      ga.data()[i] = pg[i] * bv.data()[i];
      gb.data()[i] = pg[i] * av.data()[i];
    }
    t.accum_grad(ps[0], ga);
    t.accum_grad(ps[1], gb);
  });
}

Var div(Var a, Var b) {
  check_same(a, b, "div");
  Tensor out = a.val().clone();
  const float* pb = b.val().data();
  float* po = out.data();
  for (int64_t i = 0; i < out.numel(); ++i) po[i] /= pb[i];
  return a.tape->op(out, {a, b}, [](Tape& t, const Tensor& g, const std::vector<Var>& ps) {
    const Tensor& av = t.value(ps[0]);
    const Tensor& bv = t.value(ps[1]);
    Tensor ga = Tensor::zeros(av.shape()), gb = Tensor::zeros(bv.shape());
    for (int64_t i = 0; i < g.numel(); ++i) {
      float inv = 1.0f / bv.data()[i];
      ga.data()[i] = g.data()[i] * inv;
      gb.data()[i] = -g.data()[i] * av.data()[i] * inv * inv;
    }
    t.accum_grad(ps[0], ga);
    t.accum_grad(ps[1], gb);
  });
}

Var smul(Var a, float s) {
  Tensor out = a.val().clone();
  float* p = out.data();
  for (int64_t i = 0; i < out.numel(); ++i) p[i] *= s;
  return a.tape->op(out, {a}, [s](Tape& t, const Tensor& g, const std::vector<Var>& ps) {
    Tensor ga = g.clone();
    float* p = ga.data();
    for (int64_t i = 0; i < ga.numel(); ++i) p[i] *= s;
    t.accum_grad(ps[0], ga);
  });
}

Var sadd(Var a, float s) {
  Tensor out = a.val().clone();
  float* p = out.data();
  for (int64_t i = 0; i < out.numel(); ++i) p[i] += s;
  return a.tape->op(out, {a}, [](Tape& t, const Tensor& g, const std::vector<Var>& ps) {
    t.accum_grad(ps[0], g);
  });
}

Var neg(Var a) { return smul(a, -1.0f); }

namespace {

template <class F, class DF>
Var unary(Var a, F f, DF df) {
  Tensor out = a.val().clone();
  float* p = out.data();
  for (int64_t i = 0; i < out.numel(); ++i) p[i] = f(p[i]);
  return a.tape->op(out, {a}, [df](Tape& t, const Tensor& g, const std::vector<Var>& ps) {
    const Tensor& x = t.value(ps[0]);
    Tensor ga = Tensor::zeros(x.shape());
    for (int64_t i = 0; i < g.numel(); ++i) ga.data()[i] = g.data()[i] * df(x.data()[i]);
    t.accum_grad(ps[0], ga);
  });
}

} // namespace

Var relu(Var a) {
  return unary(a, [](float x) { return x > 0 ? x : 0.0f; },
               [](float x) { return x > 0 ? 1.0f : 0.0f; });
}

Var silu(Var a) {
  return unary(a,
      [](float x) { return x / (1.0f + std::exp(-x)); },
      [](float x) {
        float s = 1.0f / (1.0f + std::exp(-x));
        return s * (1.0f + x * (1.0f - s));
      });
}

Var gelu(Var a) {
  constexpr float inv_sqrt2 = 0.7071067811865475f;
  constexpr float inv_sqrt2pi = 0.3989422804014327f;
  return unary(a,
      [=](float x) { return 0.5f * x * (1.0f + std::erf(x * inv_sqrt2)); },
      [=](float x) {
        float cdf = 0.5f * (1.0f + std::erf(x * inv_sqrt2));
        float pdf = inv_sqrt2pi * std::exp(-0.5f * x * x);
        return cdf + x * pdf;
      });
}

Var sigmoid(Var a) {
  return unary(a,
      [](float x) { return 1.0f / (1.0f + std::exp(-x)); },
      [](float x) {
        float s = 1.0f / (1.0f + std::exp(-x));
        return s * (1.0f - s);
      });
}

Var exp(Var a) {
  return unary(a, [](float x) { return std::exp(x); }, [](float x) { return std::exp(x); });
}

Var log(Var a) {
  return unary(a, [](float x) { return std::log(x); }, [](float x) { return 1.0f / x; });
}

Var sqrt(Var a) {
  return unary(a, [](float x) { return std::sqrt(x); },
               [](float x) { return 0.5f / std::sqrt(x); });
}

Var rsqrt(Var a, float eps) {
  return unary(a,
      [eps](float x) { return 1.0f / std::sqrt(x + eps); },
      [eps](float x) {
        float r = 1.0f / std::sqrt(x + eps);
        return -0.5f * r * r * r;
      });
}

Var abs(Var a) {
  return unary(a, [](float x) { return std::fabs(x); },
               [](float x) { return x > 0 ? 1.0f : (x < 0 ? -1.0f : 0.0f); });
}

Var square(Var a) {
  return unary(a, [](float x) { return x * x; }, [](float x) { return 2.0f * x; });
}

namespace {

enum class Bc { AddRow, AddCol, MulRow, MulCol };

Var bcast(Var x, Var v, Bc kind) {
  auto [r, c] = as2d(x.shape());
  bool row = (kind == Bc::AddRow || kind == Bc::MulRow);
  TC_CHECK(v.val().numel() == (row ? c : r), "broadcast: vector length mismatch");
  Tensor out = x.val().clone();
  const float* pv = v.val().data();
  float* po = out.data();
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) {
      float s = row ? pv[j] : pv[i];
      float& o = po[int64_t(i) * c + j];
      if (kind == Bc::AddRow || kind == Bc::AddCol) o += s;
      else o *= s;
    }
  return x.tape->op(out, {x, v}, [r, c, kind, row](Tape& t, const Tensor& g, const std::vector<Var>& ps) {
    bool additive = (kind == Bc::AddRow || kind == Bc::AddCol);
    const Tensor& xv = t.value(ps[0]);
    const Tensor& vv = t.value(ps[1]);
    Tensor gv = Tensor::zeros(vv.shape());
    const float* pg = g.data();
    if (additive) {
      t.accum_grad(ps[0], g);
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) gv.data()[row ? j : i] += pg[int64_t(i) * c + j];
    } else {
      Tensor gx = Tensor::zeros(xv.shape());
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) {
          int64_t k = int64_t(i) * c + j;
          int vi = row ? j : i;
          gx.data()[k] = pg[k] * vv.data()[vi];
          gv.data()[vi] += pg[k] * xv.data()[k];
        }
      t.accum_grad(ps[0], gx);
    }
    t.accum_grad(ps[1], gv);
  });
}

} // namespace

Var add_row(Var x, Var v) { return bcast(x, v, Bc::AddRow); }
Var add_col(Var x, Var v) { return bcast(x, v, Bc::AddCol); }
Var mul_row(Var x, Var v) { return bcast(x, v, Bc::MulRow); }
Var mul_col(Var x, Var v) { return bcast(x, v, Bc::MulCol); }

namespace {

Var chan_bcast(Var x, Var v, bool additive) {
  const Shape& s = x.shape();
  TC_CHECK(s.ndim() == 4, "chan broadcast: need [N,C,H,W]");
  int n = s[0], c = s[1];
  int64_t hw = int64_t(s[2]) * s[3];
  TC_CHECK(v.val().numel() == c, "chan broadcast: vector length mismatch");
  Tensor out = x.val().clone();
  const float* pv = v.val().data();
  for (int ni = 0; ni < n; ++ni)
    for (int ci = 0; ci < c; ++ci) {
      float* p = out.data() + (int64_t(ni) * c + ci) * hw;
      float sv = pv[ci];
      if (additive) for (int64_t k = 0; k < hw; ++k) p[k] += sv;
      else for (int64_t k = 0; k < hw; ++k) p[k] *= sv;
    }
  return x.tape->op(out, {x, v}, [n, c, hw, additive](Tape& t, const Tensor& g, const std::vector<Var>& ps) {
    const Tensor& xv = t.value(ps[0]);
    const Tensor& vv = t.value(ps[1]);
    Tensor gv = Tensor::zeros(vv.shape());
    if (additive) {
      t.accum_grad(ps[0], g);
      for (int ni = 0; ni < n; ++ni)
        for (int ci = 0; ci < c; ++ci) {
          const float* pg = g.data() + (int64_t(ni) * c + ci) * hw;
          double acc = 0;
          for (int64_t k = 0; k < hw; ++k) acc += pg[k];
          gv.data()[ci] += float(acc);
        }
    } else {
      Tensor gx = Tensor::zeros(xv.shape());
      for (int ni = 0; ni < n; ++ni)
        for (int ci = 0; ci < c; ++ci) {
          int64_t base = (int64_t(ni) * c + ci) * hw;
          const float* pg = g.data() + base;
          const float* px = xv.data() + base;
          float* pgx = gx.data() + base;
          float sv = vv.data()[ci];
          double acc = 0;
          for (int64_t k = 0; k < hw; ++k) {
            pgx[k] = pg[k] * sv;
            acc += double(pg[k]) * px[k];
          }
          gv.data()[ci] += float(acc);
        }
      t.accum_grad(ps[0], gx);
    }
    t.accum_grad(ps[1], gv);
  });
}

} // namespace

Var add_chan(Var x, Var v) { return chan_bcast(x, v, true); }
Var mul_chan(Var x, Var v) { return chan_bcast(x, v, false); }

namespace {

// mode: 0 = a*b, 1 = a*b^T, 2 = a^T*b
Var mm(Var a, Var b, int mode) {
  TC_CHECK(a.dim() == 2 && b.dim() == 2, "matmul: rank-2 only");
  int m, k, n;
  if (mode == 0) {
    m = a.shape()[0]; k = a.shape()[1]; n = b.shape()[1];
    TC_CHECK(b.shape()[0] == k, "matmul: inner dim mismatch");
  } else if (mode == 1) {
    m = a.shape()[0]; k = a.shape()[1]; n = b.shape()[0];
    TC_CHECK(b.shape()[1] == k, "matmul_nt: inner dim mismatch");
  } else {
    k = a.shape()[0]; m = a.shape()[1]; n = b.shape()[1];
    TC_CHECK(b.shape()[0] == k, "matmul_tn: inner dim mismatch");
  }
  Tensor out = Tensor::zeros(Shape({m, n}));
  {
    CMap ma(a.val().data(), a.shape()[0], a.shape()[1]);
    CMap mb(b.val().data(), b.shape()[0], b.shape()[1]);
    Map mo(out.data(), m, n);
    if (mode == 0) mo.noalias() = ma * mb;
    else if (mode == 1) mo.noalias() = ma * mb.transpose();
    else mo.noalias() = ma.transpose() * mb;
  }
  return a.tape->op(out, {a, b}, [mode](Tape& t, const Tensor& g, const std::vector<Var>& ps) {
    const Tensor& av = t.value(ps[0]);
    const Tensor& bv = t.value(ps[1]);
    CMap ma(av.data(), av.shape()[0], av.shape()[1]);
    CMap mb(bv.data(), bv.shape()[0], bv.shape()[1]);
    CMap mg(g.data(), g.shape()[0], g.shape()[1]);
    Tensor ga = Tensor::zeros(av.shape()), gb = Tensor::zeros(bv.shape());
    Map mga(ga.data(), av.shape()[0], av.shape()[1]);
    Map mgb(gb.data(), bv.shape()[0], bv.shape()[1]);
    if (mode == 0) {
      mga.noalias() = mg * mb.transpose();
      mgb.noalias() = ma.transpose() * mg;
    } else if (mode == 1) {
      mga.noalias() = mg * mb;
      mgb.noalias() = mg.transpose() * ma;
    } else {
      mga.noalias() = mb * mg.transpose();
      mgb.noalias() = ma * mg;
    }
    t.accum_grad(ps[0], ga);
    t.accum_grad(ps[1], gb);
  });
}

} // namespace

Var matmul(Var a, Var b) { return mm(a, b, 0); }
Var matmul_nt(Var a, Var b) { return mm(a, b, 1); }
Var matmul_tn(Var a, Var b) { return mm(a, b, 2); }

Var reshape(Var x, Shape s) {
  Tensor out = x.val().reshaped(s);  // shares storage; values are immutable
  Shape orig = x.shape();
  return x.tape->op(out, {x}, [orig](Tape& t, const Tensor& g, const std::vector<Var>& ps) {
    t.accum_grad(ps[0], g.reshaped(orig));
  });
}

Var transpose(Var x) {
  TC_CHECK(x.dim() == 2, "transpose: rank-2 only");
  int r = x.shape()[0], c = x.shape()[1];
  Tensor out = Tensor::zeros(Shape({c, r}));
  Map(out.data(), c, r) = CMap(x.val().data(), r, c).transpose();
  return x.tape->op(out, {x}, [r, c](Tape& t, const Tensor& g, const std::vector<Var>& ps) {
    Tensor gx = Tensor::zeros(Shape({r, c}));
    Map(gx.data(), r, c) = CMap(g.data(), c, r).transpose();
    t.accum_grad(ps[0], gx);
  });
}

Var slice_cols(Var x, int c0, int c1) {
  auto [r, c] = as2d(x.shape());
  TC_CHECK(0 <= c0 && c0 < c1 && c1 <= c, "slice_cols: bad range");
  TC_CHECK(x.dim() == 2, "slice_cols: rank-2 only");
  int w = c1 - c0;
  Tensor out = Tensor::zeros(Shape({r, w}));
  for (int i = 0; i < r; ++i)
    std::memcpy(out.data() + int64_t(i) * w, x.val().data() + int64_t(i) * c + c0,
                sizeof(float) * w);
  return x.tape->op(out, {x}, [r, c, c0, w](Tape& t, const Tensor& g, const std::vector<Var>& ps) {
    Tensor gx = Tensor::zeros(t.value(ps[0]).shape());
    for (int i = 0; i < r; ++i)
      std::memcpy(gx.data() + int64_t(i) * c + c0, g.data() + int64_t(i) * w, sizeof(float) * w);
    t.accum_grad(ps[0], gx);
  });
}

Var slice_rows(Var x, int r0, int r1) {
  TC_CHECK(x.dim() >= 1, "slice_rows: rank >= 1");
  int r = x.shape()[0];
  TC_CHECK(0 <= r0 && r0 < r1 && r1 <= r, "slice_rows: bad range");
  int64_t stride = x.val().numel() / r;
  Shape os = x.shape();
  os.d[0] = r1 - r0;
  Tensor out = Tensor::zeros(os);
  std::memcpy(out.data(), x.val().data() + r0 * stride, sizeof(float) * (r1 - r0) * stride);
  return x.tape->op(out, {x}, [r0, stride](Tape& t, const Tensor& g, const std::vector<Var>& ps) {
    Tensor gx = Tensor::zeros(t.value(ps[0]).shape());
    std::memcpy(gx.data() + r0 * stride, g.data(), sizeof(float) * g.numel());
    t.accum_grad(ps[0], gx);
  });
}

Var concat_cols(const std::vector<Var>& xs) {
  TC_CHECK(!xs.empty(), "concat_cols: empty");
  int r = xs[0].shape()[0];
  int ctotal = 0;
  for (const Var& v : xs) {
    TC_CHECK(v.dim() == 2 && v.shape()[0] == r, "concat_cols: row mismatch");
    ctotal += v.shape()[1];
  }
  Tensor out = Tensor::zeros(Shape({r, ctotal}));
  std::vector<int> widths;
  int off = 0;
  for (const Var& v : xs) {
    int w = v.shape()[1];
    widths.push_back(w);
    for (int i = 0; i < r; ++i)
      std::memcpy(out.data() + int64_t(i) * ctotal + off, v.val().data() + int64_t(i) * w,
                  sizeof(float) * w);
    off += w;
  }
  return xs[0].tape->op(out, xs, [r, ctotal, widths](Tape& t, const Tensor& g, const std::vector<Var>& ps) {
    int off = 0;
    for (size_t k = 0; k < ps.size(); ++k) {
      int w = widths[k];
      Tensor gx = Tensor::zeros(Shape({r, w}));
      for (int i = 0; i < r; ++i)
        std::memcpy(gx.data() + int64_t(i) * w, g.data() + int64_t(i) * ctotal + off,
                    sizeof(float) * w);
      t.accum_grad(ps[k], gx);
      off += w;
    }
  });
}

Var concat_rows(const std::vector<Var>& xs) {
  TC_CHECK(!xs.empty(), "concat_rows: empty");
  Shape tail = xs[0].shape();
  int64_t stride = xs[0].val().numel() / tail[0];
  int rtotal = 0;
  for (const Var& v : xs) {
    TC_CHECK(v.dim() == tail.ndim(), "concat_rows: rank mismatch");
    TC_CHECK(v.val().numel() / v.shape()[0] == stride, "concat_rows: trailing shape mismatch");
    rtotal += v.shape()[0];
  }
  Shape os = tail;
  os.d[0] = rtotal;
  Tensor out = Tensor::zeros(os);
  std::vector<int> rows;
  int64_t off = 0;
  for (const Var& v : xs) {
    rows.push_back(v.shape()[0]);
    std::memcpy(out.data() + off, v.val().data(), sizeof(float) * v.val().numel());
    off += v.val().numel();
  }
  return xs[0].tape->op(out, xs, [rows, stride](Tape& t, const Tensor& g, const std::vector<Var>& ps) {
    int64_t off = 0;
    for (size_t k = 0; k < ps.size(); ++k) {
      Shape s = t.value(ps[k]).shape();
      Tensor gx = Tensor::zeros(s);
      std::memcpy(gx.data(), g.data() + off, sizeof(float) * gx.numel());
      t.accum_grad(ps[k], gx);
      off += gx.numel();
    }
  });
}

Var concat_chan(const std::vector<Var>& xs) {
  TC_CHECK(!xs.empty(), "concat_chan: empty");
  const Shape& s0 = xs[0].shape();
  TC_CHECK(s0.ndim() == 4, "concat_chan: need [N,C,H,W]");
  int n = s0[0], h = s0[2], w = s0[3];
  int ctotal = 0;
  for (const Var& v : xs) {
    const Shape& s = v.shape();
    TC_CHECK(s.ndim() == 4 && s[0] == n && s[2] == h && s[3] == w, "concat_chan: shape mismatch");
    ctotal += s[1];
  }
  int64_t hw = int64_t(h) * w;
  Tensor out = Tensor::zeros(Shape({n, ctotal, h, w}));
  std::vector<int> chans;
  int coff = 0;
  for (const Var& v : xs) {
    int c = v.shape()[1];
    chans.push_back(c);
    for (int ni = 0; ni < n; ++ni)
      std::memcpy(out.data() + (int64_t(ni) * ctotal + coff) * hw,
                  v.val().data() + int64_t(ni) * c * hw, sizeof(float) * c * hw);
    coff += c;
  }
  return xs[0].tape->op(out, xs, [n, ctotal, hw, chans](Tape& t, const Tensor& g, const std::vector<Var>& ps) {
    int coff = 0;
    for (size_t k = 0; k < ps.size(); ++k) {
      int c = chans[k];
      Tensor gx = Tensor::zeros(t.value(ps[k]).shape());
      for (int ni = 0; ni < n; ++ni)
        std::memcpy(gx.data() + int64_t(ni) * c * hw,
                    g.data() + (int64_t(ni) * ctotal + coff) * hw, sizeof(float) * c * hw);
      t.accum_grad(ps[k], gx);
      coff += c;
    }
  });
}

Var vsum(Var x) {
  double acc = 0;
  const float* p = x.val().data();
  for (int64_t i = 0; i < x.val().numel(); ++i) acc += p[i];
  Tensor out = Tensor::scalar(float(acc));
  return x.tape->op(out, {x}, [](Tape& t, const Tensor& g, const std::vector<Var>& ps) {
    Tensor gx = Tensor::full(t.value(ps[0]).shape(), g.item());
    t.accum_grad(ps[0], gx);
  });
}

Var vmean(Var x) {
  int64_t n = x.val().numel();
  return smul(vsum(x), 1.0f / float(n));
}

Var rowsum(Var x) {
  TC_CHECK(x.dim() == 2, "rowsum: rank-2 only");
  int r = x.shape()[0], c = x.shape()[1];
  Tensor out = Tensor::zeros(Shape({r}));
  for (int i = 0; i < r; ++i) {
    double acc = 0;
    const float* p = x.val().data() + int64_t(i) * c;
    for (int j = 0; j < c; ++j) acc += p[j];
    out.data()[i] = float(acc);
  }
  return x.tape->op(out, {x}, [r, c](Tape& t, const Tensor& g, const std::vector<Var>& ps) {
    Tensor gx = Tensor::zeros(Shape({r, c}));
    for (int i = 0; i < r; ++i) {
      float gi = g.data()[i];
      float* p = gx.data() + int64_t(i) * c;
      for (int j = 0; j < c; ++j) p[j] = gi;
    }
    t.accum_grad(ps[0], gx);
  });
}

Var colsum(Var x) {
  TC_CHECK(x.dim() == 2, "colsum: rank-2 only");
  int r = x.shape()[0], c = x.shape()[1];
  Tensor out = Tensor::zeros(Shape({c}));
  for (int i = 0; i < r; ++i) {
    const float* p = x.val().data() + int64_t(i) * c;
    for (int j = 0; j < c; ++j) out.data()[j] += p[j];
  }
  return x.tape->op(out, {x}, [r, c](Tape& t, const Tensor& g, const std::vector<Var>& ps) {
    Tensor gx = Tensor::zeros(Shape({r, c}));
    for (int i = 0; i < r; ++i)
      std::memcpy(gx.data() + int64_t(i) * c, g.data(), sizeof(float) * c);
    t.accum_grad(ps[0], gx);
  });
}

Var softmax_rows(Var x) {
  TC_CHECK(x.dim() == 2, "softmax_rows: rank-2 only");
  int r = x.shape()[0], c = x.shape()[1];
  Tensor out = Tensor::zeros(x.shape());
  for (int i = 0; i < r; ++i) {
    const float* px = x.val().data() + int64_t(i) * c;
    float* po = out.data() + int64_t(i) * c;
    float mx = px[0];
    for (int j = 1; j < c; ++j) mx = std::max(mx, px[j]);
    double z = 0;
    for (int j = 0; j < c; ++j) {
      po[j] = std::exp(px[j] - mx);
      z += po[j];
    }
    float inv = float(1.0 / z);
    for (int j = 0; j < c; ++j) po[j] *= inv;
  }
  Tensor probs = out;  // shares storage with the node's value
  return x.tape->op(out, {x}, [r, c, probs](Tape& t, const Tensor& g, const std::vector<Var>& ps) {
    Tensor gx = Tensor::zeros(probs.shape());
    for (int i = 0; i < r; ++i) {
      const float* pp = probs.data() + int64_t(i) * c;
      const float* pg = g.data() + int64_t(i) * c;
      float* px = gx.data() + int64_t(i) * c;
      double dot = 0;
      for (int j = 0; j < c; ++j) dot += double(pg[j]) * pp[j];
      for (int j = 0; j < c; ++j) px[j] = pp[j] * (pg[j] - float(dot));
    }
    t.accum_grad(ps[0], gx);
  });
}

Var log_softmax_rows(Var x) {
  TC_CHECK(x.dim() == 2, "log_softmax_rows: rank-2 only");
  int r = x.shape()[0], c = x.shape()[1];
  Tensor out = Tensor::zeros(x.shape());
  for (int i = 0; i < r; ++i) {
    const float* px = x.val().data() + int64_t(i) * c;
    float* po = out.data() + int64_t(i) * c;
    float mx = px[0];
    for (int j = 1; j < c; ++j) mx = std::max(mx, px[j]);
    double z = 0;
    for (int j = 0; j < c; ++j) z += std::exp(double(px[j]) - mx);
    float lz = mx + float(std::log(z));
    for (int j = 0; j < c; ++j) po[j] = px[j] - lz;
  }
  Tensor lsm = out;
  return x.tape->op(out, {x}, [r, c, lsm](Tape& t, const Tensor& g, const std::vector<Var>& ps) {
    Tensor gx = Tensor::zeros(lsm.shape());
    for (int i = 0; i < r; ++i) {
      const float* pl = lsm.data() + int64_t(i) * c;
      const float* pg = g.data() + int64_t(i) * c;
      float* px = gx.data() + int64_t(i) * c;
      double gs = 0;
      for (int j = 0; j < c; ++j) gs += pg[j];
      for (int j = 0; j < c; ++j) px[j] = pg[j] - float(gs * std::exp(double(pl[j])));
    }
    t.accum_grad(ps[0], gx);
  });
}

Var cross_entropy_masked(Var logits, const std::vector<int>& labels,
                         const std::vector<float>& mask) {
  TC_CHECK(logits.dim() == 2, "cross_entropy_masked: rank-2 only");
  int r = logits.shape()[0], c = logits.shape()[1];
  TC_CHECK(int(labels.size()) == r && int(mask.size()) == r,
           "cross_entropy_masked: label/mask length mismatch");
  // keep per-row log-probs for the backward; mask selects supervised rows
  Tensor lsm = Tensor::zeros(logits.shape());
  double loss = 0;
  int count = 0;
  for (int i = 0; i < r; ++i) {
    const float* px = logits.val().data() + int64_t(i) * c;
    float* po = lsm.data() + int64_t(i) * c;
    float mx = px[0];
    for (int j = 1; j < c; ++j) mx = std::max(mx, px[j]);
    double z = 0;
    for (int j = 0; j < c; ++j) z += std::exp(double(px[j]) - mx);
    float lz = mx + float(std::log(z));
    for (int j = 0; j < c; ++j) po[j] = px[j] - lz;
    if (mask[i] != 0.0f) {
      TC_CHECK(0 <= labels[i] && labels[i] < c, "cross_entropy_masked: label out of range");
      loss -= po[labels[i]];
      ++count;
    }
  }
  TC_CHECK(count > 0, "cross_entropy_masked: empty mask");
  Tensor out = Tensor::scalar(float(loss / count));
  return logits.tape->op(out, {logits}, [r, c, labels, mask, lsm, count](
                                            Tape& t, const Tensor& g, const std::vector<Var>& ps) {
    float scale = g.item() / float(count);
    Tensor gx = Tensor::zeros(lsm.shape());
    for (int i = 0; i < r; ++i) {
      if (mask[i] == 0.0f) continue;
      const float* pl = lsm.data() + int64_t(i) * c;
      float* px = gx.data() + int64_t(i) * c;
      for (int j = 0; j < c; ++j) px[j] = scale * std::exp(pl[j]);
      px[labels[i]] -= scale;
    }
    t.accum_grad(ps[0], gx);
  });
}

Var embedding(Var table, const std::vector<int>& ids) {
  TC_CHECK(table.dim() == 2, "embedding: table rank-2");
  int v = table.shape()[0], d = table.shape()[1];
  int l = int(ids.size());
  Tensor out = Tensor::zeros(Shape({l, d}));
  for (int i = 0; i < l; ++i) {
    TC_CHECK(0 <= ids[i] && ids[i] < v, "embedding: id out of range");
    std::memcpy(out.data() + int64_t(i) * d, table.val().data() + int64_t(ids[i]) * d,
                sizeof(float) * d);
  }
  return table.tape->op(out, {table}, [ids, d](Tape& t, const Tensor& g, const std::vector<Var>& ps) {
    Tensor gt = Tensor::zeros(t.value(ps[0]).shape());
    for (size_t i = 0; i < ids.size(); ++i) {
      const float* pg = g.data() + int64_t(i) * d;
      float* pt = gt.data() + int64_t(ids[i]) * d;
      for (int j = 0; j < d; ++j) pt[j] += pg[j];
    }
    t.accum_grad(ps[0], gt);
  });
}

Var linear(Var x, Var w, Var b) {
  return add_row(matmul(x, w), b);
}

Var layernorm(Var x, Var gamma, Var beta, float eps) {
  TC_CHECK(x.dim() == 2, "layernorm: rank-2 only");
  int c = x.shape()[1];
  Var m = smul(rowsum(x), 1.0f / float(c));
  Var d = add_col(x, neg(m));
  Var v = smul(rowsum(square(d)), 1.0f / float(c));
  Var xhat = mul_col(d, rsqrt(v, eps));
  return add_row(mul_row(xhat, gamma), beta);
}

Var groupnorm(Var x, int groups, Var gamma, Var beta, float eps) {
  Shape s = x.shape();  // by value: node storage may move as ops append
  TC_CHECK(s.ndim() == 4, "groupnorm: need [N,C,H,W]");
  int n = s[0], c = s[1], h = s[2], w = s[3];
  TC_CHECK(c % groups == 0, "groupnorm: channels not divisible by groups");
  int gs = (c / groups) * h * w;
  Var flat = reshape(x, Shape({n * groups, gs}));
  Var m = smul(rowsum(flat), 1.0f / float(gs));
  Var d = add_col(flat, neg(m));
  Var v = smul(rowsum(square(d)), 1.0f / float(gs));
  Var xhat = mul_col(d, rsqrt(v, eps));
  Var back = reshape(xhat, s);
  return add_chan(mul_chan(back, gamma), beta);
}

Var adain(Var content, Var style_mean, Var style_std, float eps) {
  Shape s = content.shape();  // by value: node storage may move as ops append
  TC_CHECK(s.ndim() == 4, "adain: need [N,C,H,W]");
  TC_CHECK(style_mean.dim() == 2 && style_std.dim() == 2, "adain: stats are [N,C]");
  int n = s[0], c = s[1], h = s[2], w = s[3];
  TC_CHECK(style_mean.shape()[0] == n && style_mean.shape()[1] == c, "adain: stat shape");
  int64_t hw = int64_t(h) * w;
  Var flat = reshape(content, Shape({n * c, int(hw)}));
  Var m = smul(rowsum(flat), 1.0f / float(hw));
  Var d = add_col(flat, neg(m));
  Var v = smul(rowsum(square(d)), 1.0f / float(hw));
  Var xhat = mul_col(d, rsqrt(v, eps));
  Var sm = reshape(style_mean, Shape({n * c}));
  Var ss = reshape(style_std, Shape({n * c}));
  Var scaled = add_col(mul_col(xhat, ss), sm);
  return reshape(scaled, s);
}

Var mse_loss(Var a, Var b) { return vmean(square(sub(a, b))); }
Var mae_loss(Var a, Var b) { return vmean(abs(sub(a, b))); }

} // namespace textctrl::ops
