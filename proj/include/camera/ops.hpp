#pragma once

#include <vector>

#include "camera/tape.hpp"

// Differentiable tensor operations. Every op records an analytic backward;
// the contract is the finite-difference match checked in gradcheck.

namespace camera::ops {

enum class Pad { Same, Valid };

// elementwise binary (shapes must match)
Var add(Tape& t, Var a, Var b);
Var sub(Tape& t, Var a, Var b);
Var mul(Tape& t, Var a, Var b);
Var divv(Tape& t, Var a, Var b);

// y = k*x + c elementwise
Var affine(Tape& t, Var x, double k, double c);

// elementwise unary
Var sigmoid(Tape& t, Var x);
Var tanhv(Tape& t, Var x);
Var relu(Tape& t, Var x);
Var expv(Tape& t, Var x);
Var logv(Tape& t, Var x);
Var sqrtv(Tape& t, Var x);
Var clampMin(Tape& t, Var x, double lo);
Var clampRange(Tape& t, Var x, double lo, double hi);
Var powc(Tape& t, Var x, double e);

// a[m×k] * b[k×n]
Var matmul(Tape& t, Var a, Var b);
// W[m×n] * x[n] (+ b[m] when b.valid())
Var linear(Tape& t, Var W, Var x, Var b = {});

// input [h×w×cin], kernel [kh×kw×cin×cout]; cross-correlation convention
Var conv2d(Tape& t, Var input, Var kernel, int stride, Pad pad);
Var addChannelBias(Tape& t, Var x, Var b);

// softmax over the whole tensor (logit vectors, spatial risk maps)
Var softmaxAll(Tape& t, Var x);

// pools: [h×w×c] -> [c] or [h×w]
Var globalAvgPool(Tape& t, Var x);
Var globalMaxPool(Tape& t, Var x);
Var channelAvgPool(Tape& t, Var x);
Var channelMaxPool(Tape& t, Var x);

Var concatChannels(Tape& t, Var a, Var b);  // [h×w×ca]+[h×w×cb]
Var concatVec(Tape& t, Var a, Var b);
Var stackMaps2(Tape& t, Var a, Var b);  // two [h×w] -> [h×w×2]

Var mulChannel(Tape& t, Var x, Var v);  // x[h×w×c] ⊙ v[c] per channel
Var mulSpatial(Tape& t, Var x, Var m);  // x[h×w×c] ⊙ m[h×w] per position
Var channelSum(Tape& t, Var x);         // [h×w×c] -> [h×w]
Var broadcastChannelTo(Tape& t, Var v, int h, int w);  // [c] -> [h×w×c]

Var upsampleNearest(Tape& t, Var x, int H, int W);

Var sumAll(Tape& t, Var x);
Var meanAll(Tape& t, Var x);
Var pick(Tape& t, Var x, int i);     // scalar x[i]
Var scaleVar(Tape& t, Var x, Var s); // tensor * scalar var
Var stackScalars(Tape& t, const std::vector<Var>& xs);
Var diffv(Tape& t, Var x);  // y[i] = x[i+1]-x[i]

// mean of embedding rows for non-pad tokens; zero vector when all pads
Var embedMeanPool(Tape& t, Var table, const std::vector<int>& tokens,
                  int padId = 0);

// non-differentiable helpers on plain tensors
Tensor conv2dShapeProbe(const Tensor& input, const Tensor& kernel, int stride,
                        Pad pad);

}  // namespace camera::ops
