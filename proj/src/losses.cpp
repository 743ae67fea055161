#include "camera/losses.hpp"

#include <cmath>

namespace camera {

using namespace ops;

namespace {
constexpr double kProbClamp = 1e-7;
constexpr double kMapEps = 1e-8;
}  // namespace

Tensor attentionTarget(const ScenarioSequence& seq, int frame, int h, int w) {
  const Tensor m = seq.mapAt(frame);
  const int fy = seq.H / h, fx = seq.W / w;
  Tensor q({h, w});
  double total = 0.0;
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int dy = 0; dy < fy; ++dy)
        for (int dx = 0; dx < fx; ++dx) acc += m.at(r * fy + dy, c * fx + dx);
      const double v = acc / (fy * fx) + kMapEps;
      q.at(r, c) = v;
      total += v;
    }
  for (size_t i = 0; i < q.size(); ++i) q[i] /= total;
  return q;
}

LossTerms sequenceLoss(Tape& t, const SequenceForward& fw,
                       const ScenarioSequence& seq, int h, int w,
                       const LossWeights& lw, const FocalParams& fp,
                       double window_s) {
  const std::vector<double> y = labelFrames(seq, window_s);
  const int T = static_cast<int>(fw.frames.size());

  std::vector<Var> focals, ps;
  std::vector<Var> kls;
  focals.reserve(static_cast<size_t>(T));
  for (int f = 0; f < T; ++f) {
    const FrameOutput& fo = fw.frames[static_cast<size_t>(f)];
    Var p = clampRange(t, fo.p, kProbClamp, 1.0 - kProbClamp);
    ps.push_back(fo.p);
    Var term;
    if (y[static_cast<size_t>(f)] > 0.5) {
      // -alpha * (1-p)^gamma * log(p)
      Var mod = powc(t, affine(t, p, -1.0, 1.0), fp.gamma);
      term = affine(t, mul(t, mod, logv(t, p)), -fp.alpha, 0.0);
    } else {
      // -(1-alpha) * p^gamma * log(1-p)
      Var mod = powc(t, p, fp.gamma);
      term = affine(t, mul(t, mod, logv(t, affine(t, p, -1.0, 1.0))),
                    -(1.0 - fp.alpha), 0.0);
    }
    focals.push_back(term);

    // KL(Q || M_s) = sum q log q - sum q log(m + eps); the first sum is a
    // data constant folded into the affine offset
    const Tensor q = attentionTarget(seq, f, h, w);
    double qlogq = 0.0;
    for (size_t i = 0; i < q.size(); ++i) qlogq += q[i] * std::log(q[i]);
    Var cross = sumAll(
        t, mul(t, t.constant(q), logv(t, affine(t, fo.ms, 1.0, kMapEps))));
    kls.push_back(affine(t, cross, -1.0, qlogq));
  }

  LossTerms out;
  out.focal = meanAll(t, stackScalars(t, focals));
  out.kl = meanAll(t, stackScalars(t, kls));
  out.smooth = meanAll(t, powc(t, diffv(t, stackScalars(t, ps)), 2.0));
  out.total = add(t, add(t, affine(t, out.focal, lw.focal, 0.0),
                         affine(t, out.kl, lw.kl, 0.0)),
                  affine(t, out.smooth, lw.smooth, 0.0));
  return out;
}

double focalLossRef(const std::vector<double>& p, const std::vector<double>& y,
                    const FocalParams& fp) {
  double acc = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    const double pc = std::min(1.0 - kProbClamp, std::max(kProbClamp, p[i]));
    if (y[i] > 0.5)
      acc += -fp.alpha * std::pow(1.0 - pc, fp.gamma) * std::log(pc);
    else
      acc += -(1.0 - fp.alpha) * std::pow(pc, fp.gamma) * std::log(1.0 - pc);
  }
  return acc / static_cast<double>(p.size());
}

double klLossRef(const Tensor& q, const Tensor& m) {
  // Pure KL(q || m); callers must pass strictly positive m. The epsilon
  // guard lives only in the differentiable path, where the map comes from
  // an exactly-normalized softmax.
  double acc = 0.0;
  for (size_t i = 0; i < q.size(); ++i)
    acc += q[i] * (std::log(q[i]) - std::log(m[i]));
  return acc;
}

double smoothnessLossRef(const std::vector<double>& p) {
  double acc = 0.0;
  for (size_t i = 0; i + 1 < p.size(); ++i)
    acc += (p[i + 1] - p[i]) * (p[i + 1] - p[i]);
  return acc / static_cast<double>(p.size() - 1);
}

}  // namespace camera
