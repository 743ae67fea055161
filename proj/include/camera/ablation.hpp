#pragma once

#include "camera/metrics.hpp"
#include "camera/train.hpp"

namespace camera {

struct AblationConfig {
  uint64_t seed = 42;
  int trainCount = 96;
  int valCount = 32;
  int testCount = 64;
  double positiveFraction = 0.5;
  ScenarioConfig scenario;
  ModelConfig model;
  TrainConfig train;
  bool verbose = false;
};

struct AblationRow {
  std::string name;
  double ap = 0.0, auc = 0.0, mTTA = 0.0;
};

struct AblationReport {
  std::vector<AblationRow> rows;
  const AblationRow* find(const std::string& name) const;
};

// Degraded-input evaluation: each frame after the first is dropped with the
// given rate; a dropped frame reuses the last observed grid and attention map.
std::vector<ScenarioSequence> applyFrameDrop(
    const std::vector<ScenarioSequence>& seqs, double rate, uint64_t seed);

// Class-balanced prefix subset of the training pool.
std::vector<ScenarioSequence> subsetFraction(
    const std::vector<ScenarioSequence>& seqs, double fraction);

// Full grid: training fractions {50,75,100}% x frame-drop rates {10,20,50}%,
// plus module knockouts (-MFE, -AHF, -BiGRU) and the clean full baseline.
AblationReport runAblation(const AblationConfig& cfg);

}  // namespace camera
