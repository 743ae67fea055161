#include "camera/ablation.hpp"

#include <cmath>
#include <cstdio>

#include "camera/rng.hpp"

namespace camera {

const AblationRow* AblationReport::find(const std::string& name) const {
  for (const AblationRow& r : rows)
    if (r.name == name) return &r;
  return nullptr;
}

std::vector<ScenarioSequence> applyFrameDrop(
    const std::vector<ScenarioSequence>& seqs, double rate, uint64_t seed) {
  std::vector<ScenarioSequence> out = seqs;
  for (size_t i = 0; i < out.size(); ++i) {
    Rng rng = Rng::substream(seed, 0xd209u ^ i);
    ScenarioSequence& s = out[i];
    const size_t gN = static_cast<size_t>(s.H) * s.W * 3;
    const size_t mN = static_cast<size_t>(s.H) * s.W;
    int lastKept = 0;
    for (int t = 1; t < s.T; ++t) {
      if (rng.bernoulli(rate)) {
        std::copy_n(s.grids.begin() + static_cast<long>(gN) * lastKept, gN,
                    s.grids.begin() + static_cast<long>(gN) * t);
        std::copy_n(s.maps.begin() + static_cast<long>(mN) * lastKept, mN,
                    s.maps.begin() + static_cast<long>(mN) * t);
      } else {
        lastKept = t;
      }
    }
  }
  return out;
}

std::vector<ScenarioSequence> subsetFraction(
    const std::vector<ScenarioSequence>& seqs, double fraction) {
  std::vector<ScenarioSequence> pos, neg;
  for (const ScenarioSequence& s : seqs) (s.label ? pos : neg).push_back(s);
  const size_t nPos =
      static_cast<size_t>(std::llround(fraction * static_cast<double>(pos.size())));
  const size_t nNeg =
      static_cast<size_t>(std::llround(fraction * static_cast<double>(neg.size())));
  std::vector<ScenarioSequence> out;
  out.insert(out.end(), pos.begin(), pos.begin() + static_cast<long>(nPos));
  out.insert(out.end(), neg.begin(), neg.begin() + static_cast<long>(nNeg));
  return out;
}

AblationReport runAblation(const AblationConfig& cfg) {
  const auto trainSet =
      generate(cfg.seed, cfg.trainCount, cfg.positiveFraction, cfg.scenario);
  const auto valSet = generate(cfg.seed + 1, cfg.valCount, cfg.positiveFraction,
                               cfg.scenario);
  const auto testSet = generate(cfg.seed + 2, cfg.testCount,
                                cfg.positiveFraction, cfg.scenario);

  const std::vector<std::pair<std::string, double>> fractions = {
      {"train100", 1.0}, {"train75", 0.75}, {"train50", 0.5}};
  const std::vector<std::pair<std::string, double>> drops = {
      {"drop10", 0.1}, {"drop20", 0.2}, {"drop50", 0.5}};

  AblationReport rep;
  auto note = [&](const std::string& name, const EvalReport& er) {
    rep.rows.push_back({name, er.ap, er.auc, er.mTTA});
    if (cfg.verbose) {
      std::printf("%-16s ap %.4f  auc %.4f  mTTA %.3f\n", name.c_str(), er.ap,
                  er.auc, er.mTTA);
      std::fflush(stdout);
    }
  };

  for (const auto& [fname, frac] : fractions) {
    Model model(cfg.model);
    uint64_t initSeed = cfg.seed ^ 0xab1a0001u;
    model.init(splitmix64(initSeed));
    TrainConfig tc = cfg.train;
    trainModel(model, subsetFraction(trainSet, frac), valSet, tc);
    if (frac == 1.0) note("full", evaluateModel(model, testSet, cfg.train.window_s));
    for (const auto& [dname, rate] : drops) {
      const auto degraded = applyFrameDrop(testSet, rate, cfg.seed + 7);
      note(fname + "/" + dname,
           evaluateModel(model, degraded, cfg.train.window_s));
    }
  }

  const std::vector<std::pair<std::string, int>> knockouts = {
      {"-MFE", 0}, {"-AHF", 1}, {"-BiGRU", 2}};
  for (const auto& [kname, which] : knockouts) {
    ModelConfig mc = cfg.model;
    if (which == 0) mc.knockRefiner = true;
    if (which == 1) mc.knockFusion = true;
    if (which == 2) mc.knockBiGRU = true;
    Model model(mc);
    uint64_t initSeed = cfg.seed ^ 0xab1a0001u;
    model.init(splitmix64(initSeed));
    TrainConfig tc = cfg.train;
    trainModel(model, trainSet, valSet, tc);
    note(kname, evaluateModel(model, testSet, cfg.train.window_s));
  }
  return rep;
}

}  // namespace camera
