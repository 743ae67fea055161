#pragma once

#include <string>

#include "camera/losses.hpp"
#include "camera/metrics.hpp"
#include "camera/model.hpp"
#include "camera/optimizer.hpp"

namespace camera {

struct TrainConfig {
  int epochs = 50;
  int batch = 2;  // gradient-accumulation batch
  uint64_t seed = 42;
  int patience = 10;  // early stop on stagnant validation AP
  double window_s = 3.0;
  double lambdaMax = 0.2;  // projection bound for threshold coefficients
  double maxSeconds = 0.0;  // wallclock budget, 0 = unlimited
  OptimConfig optim;
  LossWeights lossWeights;
  FocalParams focal;
  std::string logPath;  // JSON-lines epoch log, empty = no log
  bool verbose = false;
};

struct EpochStats {
  int epoch = 0;
  double lr = 0.0;
  double loss = 0.0, focal = 0.0, kl = 0.0, smooth = 0.0;
  double valAP = 0.0, valAUC = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochStats> history;
  int bestEpoch = -1;
  double bestValAP = 0.0;
  bool abortedNaN = false;
  bool earlyStopped = false;
  bool hitTimeBudget = false;
};

// Deterministic training loop; leaves the best-validation parameters in the
// model on return.
TrainResult trainModel(Model& model, const std::vector<ScenarioSequence>& train,
                       const std::vector<ScenarioSequence>& val,
                       const TrainConfig& cfg);

}  // namespace camera
