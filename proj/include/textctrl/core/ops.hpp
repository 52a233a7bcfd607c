#pragma once

#include <vector>

#include "textctrl/core/tape.hpp"

// Differentiable tensor ops. Shapes are asserted at call time; every op
// allocates a fresh output and registers its backward on the tape.
namespace textctrl::ops {

// elementwise, same shape
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var smul(Var a, float s);       // a * s
Var sadd(Var a, float s);       // a + s
Var neg(Var a);

Var relu(Var a);
Var silu(Var a);
Var gelu(Var a);
Var sigmoid(Var a);
Var exp(Var a);
Var log(Var a);
Var sqrt(Var a);
Var rsqrt(Var a, float eps);    // (a + eps)^(-1/2)
Var abs(Var a);
Var square(Var a);

// broadcast over a [R,C] matrix
Var add_row(Var x, Var v);      // v: [C]
Var add_col(Var x, Var v);      // v: [R]
Var mul_row(Var x, Var v);
Var mul_col(Var x, Var v);

// broadcast over [N,C,H,W] channels
Var add_chan(Var x, Var v);     // v: [C]
Var mul_chan(Var x, Var v);

// matmul family; a,b rank-2
Var matmul(Var a, Var b);       // [M,K]x[K,N]
Var matmul_nt(Var a, Var b);    // [M,K]x[N,K]^T -> [M,N]
Var matmul_tn(Var a, Var b);    // [K,M]^T x [K,N] -> [M,N]

// shape
Var reshape(Var x, Shape s);
Var transpose(Var x);           // [R,C] -> [C,R]
Var slice_cols(Var x, int c0, int c1);
Var slice_rows(Var x, int r0, int r1);
Var concat_cols(const std::vector<Var>& xs);
Var concat_rows(const std::vector<Var>& xs);
Var concat_chan(const std::vector<Var>& xs);  // [N,Ci,H,W] along C

// reductions
Var vsum(Var x);                // scalar
Var vmean(Var x);               // scalar
Var rowsum(Var x);              // [R,C] -> [R]
Var colsum(Var x);              // [R,C] -> [C]

Var softmax_rows(Var x);
Var log_softmax_rows(Var x);

// mean of -log softmax(logits)[r, label[r]] over rows with mask != 0
Var cross_entropy_masked(Var logits, const std::vector<int>& labels,
                         const std::vector<float>& mask);

Var embedding(Var table, const std::vector<int>& ids);  // [V,d] -> [L,d]

// image-shaped ops, x: [N,C,H,W]
Var conv2d(Var x, Var w, Var b, int stride, int pad);   // w: [Co,Ci,kh,kw]
Var resize_nearest(Var x, int h2, int w2);
Var resize_bilinear(Var x, int h2, int w2);
Var avgpool_bins(Var x, int bh, int bw);                // adaptive average pool

// composites
Var linear(Var x, Var w, Var b);                        // x:[T,din], w:[din,dout]
Var layernorm(Var x, Var gamma, Var beta, float eps = 1e-5f);
Var groupnorm(Var x, int groups, Var gamma, Var beta, float eps = 1e-5f);
// renormalize [N,C,H,W] content to supplied per-channel stats; style_* are [N,C]
Var adain(Var content, Var style_mean, Var style_std, float eps = 1e-5f);
Var mse_loss(Var a, Var b);
Var mae_loss(Var a, Var b);

} // namespace textctrl::ops
