#include "camera/optimizer.hpp"

#include <cmath>

namespace camera {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

bool decayExempt(const std::string& name) {
  if (name.rfind("risk.lambda", 0) == 0) return true;
  const size_t dot = name.rfind('.');
  const std::string leaf = dot == std::string::npos ? name : name.substr(dot + 1);
  return leaf == "b" || leaf == "bz" || leaf == "br" || leaf == "bh" ||
         leaf == "levels" || leaf == "scales";
}

double scheduledLr(const OptimConfig& cfg, int epoch, int maxEpochs) {
  if (epoch < cfg.warmupEpochs)
    return cfg.lr * (epoch + 1) / cfg.warmupEpochs;
  const int span = maxEpochs - cfg.warmupEpochs;
  if (span <= 0) return cfg.lr;
  const double lo = cfg.lr * cfg.finalLrFraction;
  const double phase =
      static_cast<double>(epoch - cfg.warmupEpochs) / span;
  return lo + (cfg.lr - lo) * 0.5 * (1.0 + std::cos(kPi * phase));
}

AdamW::AdamW(ParamStore& store, OptimConfig cfg)
    : store_(store), cfg_(std::move(cfg)) {
  for (const auto& [name, p] : store_.all()) {
    m_[name] = Tensor(p.shape());
    v_[name] = Tensor(p.shape());
  }
}

void AdamW::step(double lr, double gradScale) {
  auto& grads = store_.grads();
  if (gradScale != 1.0)
    for (auto& [name, g] : grads)
      for (size_t i = 0; i < g.size(); ++i) g[i] *= gradScale;

  double norm2 = 0.0;
  for (const auto& [name, g] : grads)
    for (size_t i = 0; i < g.size(); ++i) norm2 += g[i] * g[i];
  const double norm = std::sqrt(norm2);
  const double clip =
      cfg_.clipNorm > 0 && norm > cfg_.clipNorm ? cfg_.clipNorm / norm : 1.0;

  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
  const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
  for (auto& [name, p] : store_.allMutable()) {
    if (name.rfind("risk.lambda", 0) == 0) continue;  // not loss-driven
    if (name.rfind("meta.", 0) == 0) continue;        // architecture record
    Tensor& g = grads[name];
    Tensor& m = m_[name];
    Tensor& v = v_[name];
    const double wd = decayExempt(name) ? 0.0 : cfg_.weightDecay;
    for (size_t i = 0; i < p.size(); ++i) {
      const double gi = g[i] * clip;
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
      const double mhat = m[i] / bc1, vhat = v[i] / bc2;
      p[i] -= lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + wd * p[i]);
    }
  }
}

}  // namespace camera
