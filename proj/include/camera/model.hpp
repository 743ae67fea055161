#pragma once

#include <array>
#include <string>
#include <vector>

#include "camera/ops.hpp"
#include "camera/params.hpp"
#include "camera/scenario.hpp"

namespace camera {

struct ModelConfig {
  // spatial geometry: input occupancy grid and fused feature map
  int gridH = 32, gridW = 32;
  int h = 8, w = 8;
  int c = 16;   // fused feature channels
  int c0 = 8;   // attention refiner channels
  int d = 16;   // GRU hidden size
  int K = 4;    // bottleneck attention bases
  int vocab = 64;
  int reduction = 4;  // channel-attention squeeze
  // initial values of the learnable threshold coefficients; the entropy
  // weight starts lower than the complexity weight so dense scenes lower
  // the threshold even when the driver is focused
  double lambda1Init = 0.1;
  double lambda2Init = 0.2;

  // ablation knockouts and causal (forward-only) temporal mode
  bool knockRefiner = false;   // -MFE
  bool knockFusion = false;    // -AHF
  bool knockBiGRU = false;     // -BiGRU
  bool causal = false;

  static ModelConfig reference();
  static ModelConfig mini();  // miniature preset for gradient checking

  int pyramidLevels() const;  // levels of the h x w feature pyramid
  void validate() const;
};

// Per-frame forward results. p/ms live on the tape; entropy and the adaptive
// threshold are derived from values only (no gradient path).
struct FrameOutput {
  Var p;        // scalar risk probability
  Var ms;       // [h x w] spatial risk map
  Var ctxVec;   // [c] global context vector
  double entropy = 0.0;  // normalized risk-map entropy
  double tau = 0.5;      // adaptive threshold
};

struct SequenceForward {
  std::vector<FrameOutput> frames;
};

// Plain-value trace for evaluation and alerting.
struct RiskTrace {
  std::vector<double> p, entropy, tau;
  std::vector<Tensor> ms;  // kept only when requested
};

/// Adaptive decision threshold:
// clamp(0.5 + l1*entropy - l2*tanh(ctxNorm/sqrt(c)), 0.3, 0.7).
double adaptiveTau(double entropy, double ctxNorm, double l1, double l2, int c);

// Normalized Shannon entropy of a spatial probability map.
double mapEntropy(const Tensor& m);

// Normalized Shannon entropy of a raw (unnormalized, non-negative) attention
// map: the map is shifted by epsilon and renormalized first. Throws
// InputError on an all-zero map.
double attentionEntropy(const Tensor& m);

class Model {
 public:
  explicit Model(ModelConfig cfg);

  void init(uint64_t seed) {
    store_.initialize(seed);
    writeMeta();
  }

  // Checkpoints carry the architecture in a meta tensor so evaluation can
  // reconstruct the exact model.
  void save(const std::string& path) const { store_.save(path); }
  static Model load(const std::string& path);
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }
  const ModelConfig& config() const { return cfg_; }

  // Builds the full differentiable graph for one sequence.
  SequenceForward forward(Tape& t, const ScenarioSequence& seq);

  // Forward without retaining tape state; optionally keeps risk maps.
  RiskTrace run(const ScenarioSequence& seq, bool keepMaps = false);

  double lambda1() const { return store_.param("risk.lambda1")[0]; }
  double lambda2() const { return store_.param("risk.lambda2")[0]; }

 private:
  void writeMeta();
  Var textFeature(Tape& t, const std::vector<int>& tokens);
  Var sceneFeature(Tape& t, const Tensor& grid);
  Var attentionFeature(Tape& t, const Tensor& map);
  // returns {F_fused, F_visual, F_context_map}
  std::array<Var, 3> fuse(Tape& t, Var mScene, Var mText, Var mAtt);
  Var conv(Tape& t, Var x, const std::string& name, int stride, ops::Pad pad,
           bool reluAct);

  ModelConfig cfg_;
  ParamStore store_;
};

}  // namespace camera
