#pragma once

#include "camera/params.hpp"

namespace camera {

struct OptimConfig {
  double lr = 1e-3;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  double weightDecay = 0.01;
  double clipNorm = 1.0;
  int warmupEpochs = 3;
  double finalLrFraction = 0.1;  // cosine decays to this fraction of peak
};

// Decoupled weight decay is skipped for biases, attention/scale logits, and
// the threshold coefficients.
bool decayExempt(const std::string& name);

// Linear warmup to peak, then cosine decay to finalLrFraction * peak.
double scheduledLr(const OptimConfig& cfg, int epoch, int maxEpochs);

class AdamW {
 public:
  AdamW(ParamStore& store, OptimConfig cfg);

  // Applies one update from the accumulated gradients in the store;
  // gradScale rescales them first (gradient accumulation), then the global
  // norm is clipped to clipNorm.
  void step(double lr, double gradScale = 1.0);

  int steps() const { return t_; }

 private:
  ParamStore& store_;
  OptimConfig cfg_;
  std::map<std::string, Tensor> m_, v_;
  int t_ = 0;
};

}  // namespace camera
