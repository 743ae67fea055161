#pragma once

#include "camera/model.hpp"
#include "camera/scenario.hpp"

namespace camera {

// Loss mixing weights for total = w_f*focal + w_k*attention-KL + w_s*smooth.
struct LossWeights {
  double focal = 1.0;
  double kl = 0.5;
  double smooth = 0.1;
};

struct FocalParams {
  double gamma = 2.0;
  double alpha = 0.25;  // positive-class weight
};

struct LossTerms {
  Var total, focal, kl, smooth;
};

// Supervision target for the risk map: the driver attention map average-pooled
// to the risk-map resolution and normalized to a probability distribution.
Tensor attentionTarget(const ScenarioSequence& seq, int frame, int h, int w);

// Differentiable sequence loss over a built forward graph.
LossTerms sequenceLoss(Tape& t, const SequenceForward& fw,
                       const ScenarioSequence& seq, int h, int w,
                       const LossWeights& lw = {}, const FocalParams& fp = {},
                       double window_s = 3.0);

// Plain (non-tape) reference implementations for oracle tests.
double focalLossRef(const std::vector<double>& p, const std::vector<double>& y,
                    const FocalParams& fp = {});
double klLossRef(const Tensor& q, const Tensor& m);
double smoothnessLossRef(const std::vector<double>& p);

}  // namespace camera
