#include "camera/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>

namespace camera {

namespace {

// First alerting frame under a per-frame threshold, or -1. Positives only
// count frames up to the accident.
int detectionFrame(const EvalSequence& s,
                   const std::function<bool(double, int)>& fire) {
  const int last = s.label && s.t_accident >= 0
                       ? std::min(s.t_accident,
                                  static_cast<int>(s.p.size()) - 1)
                       : static_cast<int>(s.p.size()) - 1;
  for (int t = 0; t <= last; ++t)
    if (fire(s.p[static_cast<size_t>(t)], t)) return t;
  return -1;
}

OperatingPoint operatingPoint(const std::vector<EvalSequence>& seqs,
                              const std::function<bool(const EvalSequence&,
                                                       double, int)>& fire) {
  OperatingPoint op;
  double ttaSum = 0.0;
  for (const EvalSequence& s : seqs) {
    const int det = detectionFrame(
        s, [&](double p, int t) { return fire(s, p, t); });
    if (s.label) {
      if (det >= 0) {
        ++op.tp;
        ttaSum += static_cast<double>(s.t_accident - det) / s.fps;
      } else {
        ++op.fn;
      }
    } else {
      det >= 0 ? ++op.fp : ++op.tn;
    }
  }
  op.precision = op.tp + op.fp > 0
                     ? static_cast<double>(op.tp) / (op.tp + op.fp)
                     : 0.0;
  op.recall =
      op.tp + op.fn > 0 ? static_cast<double>(op.tp) / (op.tp + op.fn) : 0.0;
  op.f1 = op.precision + op.recall > 0
              ? 2.0 * op.precision * op.recall / (op.precision + op.recall)
              : 0.0;
  op.meanTTA = op.tp > 0 ? ttaSum / op.tp : 0.0;
  return op;
}

}  // namespace

SweepPoint sweepAt(const std::vector<EvalSequence>& seqs, double theta) {
  const OperatingPoint op = operatingPoint(
      seqs, [theta](const EvalSequence&, double p, int) { return p >= theta; });
  SweepPoint sp;
  sp.theta = theta;
  sp.precision = op.precision;
  sp.recall = op.recall;
  sp.meanTTA = op.meanTTA;
  sp.tp = op.tp;
  sp.fp = op.fp;
  sp.fn = op.fn;
  sp.tn = op.tn;
  return sp;
}

double rankAuc(const std::vector<double>& scores,
               const std::vector<int>& labels) {
  const size_t n = scores.size();
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });
  size_t nPos = 0, nNeg = 0;
  double posRankSum = 0.0;
  size_t i = 0;
  double rank = 1.0;
  while (i < n) {
    size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avgRank = (rank + (rank + static_cast<double>(j - i) - 1)) / 2.0;
    for (size_t k = i; k < j; ++k)
      if (labels[order[k]] == 1) posRankSum += avgRank;
    rank += static_cast<double>(j - i);
    i = j;
  }
  for (int l : labels) (l == 1 ? nPos : nNeg) += 1;
  if (nPos == 0 || nNeg == 0) return 0.5;
  return (posRankSum - static_cast<double>(nPos) * (nPos + 1) / 2.0) /
         (static_cast<double>(nPos) * static_cast<double>(nNeg));
}

EvalReport evaluate(const std::vector<EvalSequence>& seqs, double window_s) {
  EvalReport rep;
  if (seqs.empty()) return rep;

  // threshold sweep over distinct video-level scores
  std::set<double> thetas{0.0, 1.0};
  for (const EvalSequence& s : seqs) {
    const int last = s.label && s.t_accident >= 0
                         ? std::min(s.t_accident,
                                    static_cast<int>(s.p.size()) - 1)
                         : static_cast<int>(s.p.size()) - 1;
    double best = 0.0;
    for (int t = 0; t <= last; ++t)
      best = std::max(best, s.p[static_cast<size_t>(t)]);
    thetas.insert(best);
  }
  for (double th : thetas) rep.sweep.push_back(sweepAt(seqs, th));

  // all-points interpolated AP: precision envelope over recall
  std::vector<std::pair<double, double>> pr;  // (recall, precision)
  for (const SweepPoint& sp : rep.sweep) pr.emplace_back(sp.recall, sp.precision);
  std::sort(pr.begin(), pr.end());
  double ap = 0.0, prevRecall = 0.0;
  for (size_t k = 0; k < pr.size(); ++k) {
    const double r = pr[k].first;
    if (r <= prevRecall) continue;
    double envelope = 0.0;
    for (const auto& [rr, pp] : pr)
      if (rr >= r) envelope = std::max(envelope, pp);
    ap += (r - prevRecall) * envelope;
    prevRecall = r;
  }
  rep.ap = ap;

  // sweep-based anticipation horizons
  double ttaSum = 0.0;
  int ttaCount = 0;
  double bestTheta = -1.0;
  for (const SweepPoint& sp : rep.sweep) {
    if (sp.recall > 0.0) {
      ttaSum += sp.meanTTA;
      ++ttaCount;
    }
    if (sp.recall >= 0.5 && sp.theta > bestTheta) {
      bestTheta = sp.theta;
      rep.ttaAtR50 = sp.meanTTA;
    }
  }
  rep.mTTA = ttaCount > 0 ? ttaSum / ttaCount : 0.0;

  // frame-level AUC over anticipation-window labels
  std::vector<double> frameScores;
  std::vector<int> frameLabels;
  for (const EvalSequence& s : seqs) {
    const int T = static_cast<int>(s.p.size());
    const int last = s.label && s.t_accident >= 0
                         ? std::min(s.t_accident, T - 1)
                         : T - 1;
    const int start =
        s.label && s.t_accident >= 0
            ? std::max(0, s.t_accident -
                              static_cast<int>(std::llround(window_s * s.fps)))
            : T;
    for (int t = 0; t <= last; ++t) {
      frameScores.push_back(s.p[static_cast<size_t>(t)]);
      frameLabels.push_back(s.label && t >= start ? 1 : 0);
    }
  }
  rep.auc = rankAuc(frameScores, frameLabels);

  rep.adaptive = operatingPoint(seqs, [](const EvalSequence& s, double p,
                                         int t) {
    return p > s.tau[static_cast<size_t>(t)];
  });
  rep.fixed = operatingPoint(
      seqs, [](const EvalSequence&, double p, int) { return p > 0.5; });
  rep.falseAlarmRate =
      rep.adaptive.fp + rep.adaptive.tn > 0
          ? static_cast<double>(rep.adaptive.fp) /
                (rep.adaptive.fp + rep.adaptive.tn)
          : 0.0;
  return rep;
}

std::vector<EvalSequence> traceAll(Model& model,
                                   const std::vector<ScenarioSequence>& seqs) {
  std::vector<EvalSequence> out;
  out.reserve(seqs.size());
  for (const ScenarioSequence& s : seqs) {
    RiskTrace tr = model.run(s);
    EvalSequence es;
    es.p = std::move(tr.p);
    es.tau = std::move(tr.tau);
    es.label = s.label;
    es.t_accident = s.t_accident;
    es.fps = s.fps;
    out.push_back(std::move(es));
  }
  return out;
}

EvalReport evaluateModel(Model& model,
                         const std::vector<ScenarioSequence>& seqs,
                         double window_s) {
  return evaluate(traceAll(model, seqs), window_s);
}

}  // namespace camera
