#pragma once

#include <vector>

#include "camera/model.hpp"
#include "camera/scenario.hpp"

namespace camera {

// Per-sequence evaluation input: frame risk scores, adaptive thresholds, and
// ground truth.
struct EvalSequence {
  std::vector<double> p, tau;
  bool label = false;
  int t_accident = -1;
  int fps = 10;
};

struct SweepPoint {
  double theta = 0.0;
  double precision = 0.0, recall = 0.0, meanTTA = 0.0;
  int tp = 0, fp = 0, fn = 0, tn = 0;
};

struct OperatingPoint {
  double precision = 0.0, recall = 0.0, f1 = 0.0, meanTTA = 0.0;
  int tp = 0, fp = 0, fn = 0, tn = 0;
};

struct EvalReport {
  double ap = 0.0;        // video-level average precision
  double auc = 0.0;       // frame-level ROC AUC
  double mTTA = 0.0;      // mean time-to-accident over the sweep (seconds)
  double ttaAtR50 = 0.0;  // TTA at the tightest threshold with recall >= 0.5
  double falseAlarmRate = 0.0;  // negatives alerting under the adaptive trigger
  std::vector<SweepPoint> sweep;
  OperatingPoint adaptive;  // alerts at p_t > tau_t
  OperatingPoint fixed;     // alerts at p_t > 0.5
};

// A sequence counts as detected at threshold theta when some frame at or
// before the accident (any frame, for negatives) scores >= theta.
SweepPoint sweepAt(const std::vector<EvalSequence>& seqs, double theta);

EvalReport evaluate(const std::vector<EvalSequence>& seqs,
                    double window_s = 3.0);

// Convenience: run the model over scenarios and evaluate.
std::vector<EvalSequence> traceAll(Model& model,
                                   const std::vector<ScenarioSequence>& seqs);
EvalReport evaluateModel(Model& model,
                         const std::vector<ScenarioSequence>& seqs,
                         double window_s = 3.0);

// Frame-level Mann-Whitney AUC with 0.5 credit for ties.
double rankAuc(const std::vector<double>& scores,
               const std::vector<int>& labels);

}  // namespace camera
