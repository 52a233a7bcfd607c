#include <Eigen/Dense>
#include <cmath>
#include <cstring>

#include "textctrl/core/ops.hpp"

namespace textctrl::ops {

using EMat = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Map = Eigen::Map<EMat>;
using CMap = Eigen::Map<const EMat>;

namespace {

// im2col for one image: [Ci,H,W] -> [Ci*kh*kw, Ho*Wo], zero-padded borders
void im2col(const float* x, int ci, int h, int w, int kh, int kw, int stride, int pad,
            int ho, int wo, float* col) {
  for (int c = 0; c < ci; ++c)
    for (int ky = 0; ky < kh; ++ky)
      for (int kx = 0; kx < kw; ++kx) {
        float* dst = col + int64_t((c * kh + ky) * kw + kx) * ho * wo;
        for (int oy = 0; oy < ho; ++oy) {
          int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) {
            std::memset(dst + int64_t(oy) * wo, 0, sizeof(float) * wo);
            continue;
          }
          const float* src = x + (int64_t(c) * h + iy) * w;
          for (int ox = 0; ox < wo; ++ox) {
            int ix = ox * stride - pad + kx;
            dst[int64_t(oy) * wo + ox] = (ix >= 0 && ix < w) ? src[ix] : 0.0f;
          }
        }
      }
}

// scatter-add transpose of im2col
void col2im_add(const float* col, int ci, int h, int w, int kh, int kw, int stride, int pad,
                int ho, int wo, float* x) {
  for (int c = 0; c < ci; ++c)
    for (int ky = 0; ky < kh; ++ky)
      for (int kx = 0; kx < kw; ++kx) {
        const float* src = col + int64_t((c * kh + ky) * kw + kx) * ho * wo;
        for (int oy = 0; oy < ho; ++oy) {
          int iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= h) continue;
          float* dst = x + (int64_t(c) * h + iy) * w;
          for (int ox = 0; ox < wo; ++ox) {
            int ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < w) dst[ix] += src[int64_t(oy) * wo + ox];
          }
        }
      }
}

} // namespace

Var conv2d(Var x, Var w, Var b, int stride, int pad) {
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  TC_CHECK(xs.ndim() == 4 && ws.ndim() == 4, "conv2d: x [N,Ci,H,W], w [Co,Ci,kh,kw]");
  int n = xs[0], ci = xs[1], h = xs[2], wd = xs[3];
  int co = ws[0], kh = ws[2], kw = ws[3];
  TC_CHECK(ws[1] == ci, "conv2d: channel mismatch");
  TC_CHECK(b.val().numel() == co, "conv2d: bias length mismatch");
  int ho = (h + 2 * pad - kh) / stride + 1;
  int wo = (wd + 2 * pad - kw) / stride + 1;
  TC_CHECK(ho > 0 && wo > 0, "conv2d: empty output");
  int ck = ci * kh * kw;
  int64_t sp = int64_t(ho) * wo;

  Tensor out = Tensor::zeros(Shape({n, co, ho, wo}));
  std::vector<float> col(size_t(ck) * sp);
  CMap mw(w.val().data(), co, ck);
  for (int ni = 0; ni < n; ++ni) {
    im2col(x.val().data() + int64_t(ni) * ci * h * wd, ci, h, wd, kh, kw, stride, pad, ho, wo,
           col.data());
    Map mo(out.data() + int64_t(ni) * co * sp, co, sp);
    mo.noalias() = mw * CMap(col.data(), ck, sp);
    for (int c = 0; c < co; ++c) {
      float bias = b.val().data()[c];
      float* p = out.data() + (int64_t(ni) * co + c) * sp;
      for (int64_t k = 0; k < sp; ++k) p[k] += bias;
    }
  }

  auto bw = [n, ci, h, wd, co, kh, kw, stride, pad, ho, wo, ck, sp](
                Tape& t, const Tensor& g, const std::vector<Var>& ps) {
    const Tensor& xv = t.value(ps[0]);
    const Tensor& wv = t.value(ps[1]);
    Tensor gx = Tensor::zeros(xv.shape());
    Tensor gw = Tensor::zeros(wv.shape());
    Tensor gb = Tensor::zeros(Shape({co}));
    std::vector<float> col(size_t(ck) * sp);
    std::vector<float> gcol(size_t(ck) * sp);
    CMap mw(wv.data(), co, ck);
    Map mgw(gw.data(), co, ck);
    for (int ni = 0; ni < n; ++ni) {
      CMap mg(g.data() + int64_t(ni) * co * sp, co, sp);
      im2col(xv.data() + int64_t(ni) * ci * h * wd, ci, h, wd, kh, kw, stride, pad, ho, wo,
             col.data());
      mgw.noalias() += mg * CMap(col.data(), ck, sp).transpose();
      Map(gcol.data(), ck, sp).noalias() = mw.transpose() * mg;
      col2im_add(gcol.data(), ci, h, wd, kh, kw, stride, pad, ho, wo,
                 gx.data() + int64_t(ni) * ci * h * wd);
      for (int c = 0; c < co; ++c) {
        const float* p = g.data() + (int64_t(ni) * co + c) * sp;
        double acc = 0;
        for (int64_t k = 0; k < sp; ++k) acc += p[k];
        gb.data()[c] += float(acc);
      }
    }
    t.accum_grad(ps[0], gx);
    t.accum_grad(ps[1], gw);
    t.accum_grad(ps[2], gb);
  };
  return x.tape->op(out, {x, w, b}, bw);
}

Var resize_nearest(Var x, int h2, int w2) {
  const Shape& s = x.shape();
  TC_CHECK(s.ndim() == 4, "resize_nearest: need [N,C,H,W]");
  int n = s[0], c = s[1], h = s[2], w = s[3];
  Tensor out = Tensor::zeros(Shape({n, c, h2, w2}));
  std::vector<int> ys(h2), xs(w2);
  for (int y = 0; y < h2; ++y) ys[y] = std::min(h - 1, int(float(y) * h / h2));
  for (int xx = 0; xx < w2; ++xx) xs[xx] = std::min(w - 1, int(float(xx) * w / w2));
  for (int ni = 0; ni < n; ++ni)
    for (int ci = 0; ci < c; ++ci) {
      const float* src = x.val().data() + (int64_t(ni) * c + ci) * h * w;
      float* dst = out.data() + (int64_t(ni) * c + ci) * h2 * w2;
      for (int y = 0; y < h2; ++y)
        for (int xx = 0; xx < w2; ++xx) dst[int64_t(y) * w2 + xx] = src[int64_t(ys[y]) * w + xs[xx]];
    }
  return x.tape->op(out, {x}, [n, c, h, w, h2, w2, ys, xs](Tape& t, const Tensor& g,
                                                           const std::vector<Var>& ps) {
    Tensor gx = Tensor::zeros(t.value(ps[0]).shape());
    for (int ni = 0; ni < n; ++ni)
      for (int ci = 0; ci < c; ++ci) {
        float* dst = gx.data() + (int64_t(ni) * c + ci) * h * w;
        const float* src = g.data() + (int64_t(ni) * c + ci) * h2 * w2;
        for (int y = 0; y < h2; ++y)
          for (int xx = 0; xx < w2; ++xx)
            dst[int64_t(ys[y]) * w + xs[xx]] += src[int64_t(y) * w2 + xx];
      }
    t.accum_grad(ps[0], gx);
  });
}

namespace {

struct Tap {
  int i0, i1;
  float w0, w1;
};

// half-pixel-center source coordinates, clamped at borders
std::vector<Tap> bilinear_taps(int src, int dst) {
  std::vector<Tap> taps(static_cast<size_t>(dst));
  float scale = float(src) / float(dst);
  for (int i = 0; i < dst; ++i) {
    float p = (float(i) + 0.5f) * scale - 0.5f;
    float fl = std::floor(p);
    int i0 = int(fl);
    float f = p - fl;
    int j0 = std::clamp(i0, 0, src - 1);
    int j1 = std::clamp(i0 + 1, 0, src - 1);
    taps[size_t(i)] = {j0, j1, 1.0f - f, f};
  }
  return taps;
}

} // namespace

Var resize_bilinear(Var x, int h2, int w2) {
  const Shape& s = x.shape();
  TC_CHECK(s.ndim() == 4, "resize_bilinear: need [N,C,H,W]");
  int n = s[0], c = s[1], h = s[2], w = s[3];
  auto ty = bilinear_taps(h, h2);
  auto tx = bilinear_taps(w, w2);
  Tensor out = Tensor::zeros(Shape({n, c, h2, w2}));
  for (int ni = 0; ni < n; ++ni)
    for (int ci = 0; ci < c; ++ci) {
      const float* src = x.val().data() + (int64_t(ni) * c + ci) * h * w;
      float* dst = out.data() + (int64_t(ni) * c + ci) * h2 * w2;
      for (int y = 0; y < h2; ++y) {
        const Tap& a = ty[size_t(y)];
        for (int xx = 0; xx < w2; ++xx) {
          const Tap& b = tx[size_t(xx)];
          float v = a.w0 * (b.w0 * src[int64_t(a.i0) * w + b.i0] + b.w1 * src[int64_t(a.i0) * w + b.i1]) +
                    a.w1 * (b.w0 * src[int64_t(a.i1) * w + b.i0] + b.w1 * src[int64_t(a.i1) * w + b.i1]);
          dst[int64_t(y) * w2 + xx] = v;
        }
      }
    }
  return x.tape->op(out, {x}, [n, c, h, w, h2, w2, ty, tx](Tape& t, const Tensor& g,
                                                           const std::vector<Var>& ps) {
    Tensor gx = Tensor::zeros(t.value(ps[0]).shape());
    for (int ni = 0; ni < n; ++ni)
      for (int ci = 0; ci < c; ++ci) {
        float* dst = gx.data() + (int64_t(ni) * c + ci) * h * w;
        const float* src = g.data() + (int64_t(ni) * c + ci) * h2 * w2;
        for (int y = 0; y < h2; ++y) {
          const Tap& a = ty[size_t(y)];
          for (int xx = 0; xx < w2; ++xx) {
            const Tap& b = tx[size_t(xx)];
            float gv = src[int64_t(y) * w2 + xx];
            dst[int64_t(a.i0) * w + b.i0] += a.w0 * b.w0 * gv;
            dst[int64_t(a.i0) * w + b.i1] += a.w0 * b.w1 * gv;
            dst[int64_t(a.i1) * w + b.i0] += a.w1 * b.w0 * gv;
            dst[int64_t(a.i1) * w + b.i1] += a.w1 * b.w1 * gv;
          }
        }
      }
    t.accum_grad(ps[0], gx);
  });
}

Var avgpool_bins(Var x, int bh, int bw) {
  const Shape& s = x.shape();
  TC_CHECK(s.ndim() == 4, "avgpool_bins: need [N,C,H,W]");
  int n = s[0], c = s[1], h = s[2], w = s[3];
  TC_CHECK(bh >= 1 && bw >= 1 && bh <= h && bw <= w, "avgpool_bins: bad bin grid");
  auto lo = [](int i, int total, int bins) { return i * total / bins; };
  Tensor out = Tensor::zeros(Shape({n, c, bh, bw}));
  for (int ni = 0; ni < n; ++ni)
    for (int ci = 0; ci < c; ++ci) {
      const float* src = x.val().data() + (int64_t(ni) * c + ci) * h * w;
      float* dst = out.data() + (int64_t(ni) * c + ci) * bh * bw;
      for (int by = 0; by < bh; ++by) {
        int y0 = lo(by, h, bh), y1 = lo(by + 1, h, bh);
        for (int bx = 0; bx < bw; ++bx) {
          int x0 = lo(bx, w, bw), x1 = lo(bx + 1, w, bw);
          double acc = 0;
          for (int y = y0; y < y1; ++y)
            for (int xx = x0; xx < x1; ++xx) acc += src[int64_t(y) * w + xx];
          dst[int64_t(by) * bw + bx] = float(acc / ((y1 - y0) * (x1 - x0)));
        }
      }
    }
  return x.tape->op(out, {x}, [n, c, h, w, bh, bw, lo](Tape& t, const Tensor& g,
                                                       const std::vector<Var>& ps) {
    Tensor gx = Tensor::zeros(t.value(ps[0]).shape());
    for (int ni = 0; ni < n; ++ni)
      for (int ci = 0; ci < c; ++ci) {
        float* dst = gx.data() + (int64_t(ni) * c + ci) * h * w;
        const float* src = g.data() + (int64_t(ni) * c + ci) * bh * bw;
        for (int by = 0; by < bh; ++by) {
          int y0 = lo(by, h, bh), y1 = lo(by + 1, h, bh);
          for (int bx = 0; bx < bw; ++bx) {
            int x0 = lo(bx, w, bw), x1 = lo(bx + 1, w, bw);
            float gv = src[int64_t(by) * bw + bx] / float((y1 - y0) * (x1 - x0));
            for (int y = y0; y < y1; ++y)
              for (int xx = x0; xx < x1; ++xx) dst[int64_t(y) * w + xx] += gv;
          }
        }
      }
    t.accum_grad(ps[0], gx);
  });
}

} // namespace textctrl::ops
