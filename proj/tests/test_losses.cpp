#include <doctest.h>

#include <cmath>
#include <vector>

#include "camera/losses.hpp"
#include "camera/model.hpp"
#include "camera/ops.hpp"
#include "camera/rng.hpp"

using namespace camera;

namespace {

constexpr double kMapEps = 1e-8;  // mirrors the differentiable-path guard

ScenarioConfig miniScenario() {
  ScenarioConfig sc;
  sc.T = 8;
  sc.H = sc.W = 16;
  sc.tokenLen = 8;
  return sc;
}

double crossEntropyRef(const std::vector<double>& p,
                       const std::vector<double>& y) {
  double acc = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    const double pc = std::min(1.0 - 1e-7, std::max(1e-7, p[i]));
    acc += y[i] > 0.5 ? -std::log(pc) : -std::log(1.0 - pc);
  }
  return acc / static_cast<double>(p.size());
}

Tensor randomDistribution(Rng& rng, int h, int w) {
  Tensor q({h, w});
  double total = 0.0;
  for (size_t i = 0; i < q.size(); ++i) {
    q[i] = rng.uniform(0.05, 1.0);
    total += q[i];
  }
  for (size_t i = 0; i < q.size(); ++i) q[i] /= total;
  return q;
}

}  // namespace

TEST_CASE("focal loss with gamma=0, alpha=0.5 is half the cross-entropy") {
  Rng rng(61);
  FocalParams fp;
  fp.gamma = 0.0;
  fp.alpha = 0.5;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> p(16), y(16);
    for (size_t i = 0; i < 16; ++i) {
      p[i] = rng.uniform(0.0, 1.0);
      y[i] = rng.uniform(0.0, 1.0) < 0.5 ? 0.0 : 1.0;
    }
    const double focal = focalLossRef(p, y, fp);
    const double ce = crossEntropyRef(p, y);
    CHECK(std::fabs(focal - 0.5 * ce) <= 1e-12);
  }
}

TEST_CASE("focal modulation suppresses easy examples") {
  FocalParams fp;  // gamma 2, alpha 0.25
  // confident correct positive: modulation (1-p)^2 shrinks the loss
  const double easy = focalLossRef({0.99}, {1.0}, fp);
  const double ceEasy = 0.25 * -std::log(0.99);
  CHECK(easy < ceEasy);
  CHECK(easy == doctest::Approx(0.25 * 0.01 * 0.01 * -std::log(0.99)));
  // hard positive keeps nearly the full weighted CE
  const double hard = focalLossRef({0.01}, {1.0}, fp);
  CHECK(hard == doctest::Approx(0.25 * 0.99 * 0.99 * -std::log(0.01)));
  CHECK(hard > easy);
}

TEST_CASE("KL of a distribution against itself is zero") {
  Rng rng(62);
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor q = randomDistribution(rng, 4, 4);
    CHECK(std::fabs(klLossRef(q, q)) <= 1e-10);
  }
}

TEST_CASE("KL is non-negative and detects mismatch") {
  Rng rng(63);
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor q = randomDistribution(rng, 4, 4);
    const Tensor m = randomDistribution(rng, 4, 4);
    const double kl = klLossRef(q, m);
    CHECK(kl >= -1e-12);  // Gibbs' inequality
    if (!(q == m)) CHECK(kl > 0.0);
  }
}

TEST_CASE("smoothness of a constant stream is exactly zero") {
  for (double c : {0.0, 0.25, 0.5, 0.9}) {
    std::vector<double> p(12, c);
    CHECK(smoothnessLossRef(p) == 0.0);
  }
  // a single jump of size d contributes d^2 / (T-1)
  std::vector<double> p(5, 0.2);
  p[3] = p[4] = 0.7;
  CHECK(smoothnessLossRef(p) == doctest::Approx(0.25 / 4.0).epsilon(1e-15));
}

TEST_CASE("attention target is the pooled, normalized driver map") {
  const ScenarioSequence seq = generateOne(64, 0, true, miniScenario());
  const Tensor q = attentionTarget(seq, 3, 4, 4);
  REQUIRE(q.dim(0) == 4);
  REQUIRE(q.dim(1) == 4);
  double sum = 0.0;
  for (size_t i = 0; i < q.size(); ++i) {
    CHECK(q[i] > 0.0);
    sum += q[i];
  }
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  // pooling preserves ordering of mass between two 4x4 blocks
  const Tensor m = seq.mapAt(3);
  double blockA = 0.0, blockB = 0.0;
  for (int dy = 0; dy < 4; ++dy)
    for (int dx = 0; dx < 4; ++dx) {
      blockA += m.at(dy, dx);
      blockB += m.at(8 + dy, 8 + dx);
    }
  if (blockA > blockB) CHECK(q.at(0, 0) > q.at(2, 2));
  if (blockB > blockA) CHECK(q.at(2, 2) > q.at(0, 0));
}

TEST_CASE("tape loss terms match the plain references") {
  Model m(ModelConfig::mini());
  m.init(65);
  const ScenarioSequence seq = generateOne(65, 0, true, miniScenario());

  Tape t;
  SequenceForward fw = m.forward(t, seq);
  LossTerms lt = sequenceLoss(t, fw, seq, m.config().h, m.config().w);

  std::vector<double> p;
  double klAcc = 0.0;
  for (int f = 0; f < seq.T; ++f) {
    const FrameOutput& fo = fw.frames[static_cast<size_t>(f)];
    p.push_back(t.val(fo.p)[0]);
    Tensor ms = t.val(fo.ms);
    for (size_t i = 0; i < ms.size(); ++i) ms[i] += kMapEps;
    klAcc += klLossRef(attentionTarget(seq, f, m.config().h, m.config().w), ms);
  }
  const std::vector<double> y = labelFrames(seq, 3.0);

  CHECK(t.val(lt.focal)[0] == doctest::Approx(focalLossRef(p, y)).epsilon(1e-12));
  CHECK(t.val(lt.kl)[0] == doctest::Approx(klAcc / seq.T).epsilon(1e-12));
  CHECK(t.val(lt.smooth)[0] ==
        doctest::Approx(smoothnessLossRef(p)).epsilon(1e-12));
  m.params().flushGrads(t);
}

TEST_CASE("total loss is the exact weighted sum of its terms") {
  Model m(ModelConfig::mini());
  m.init(66);
  const ScenarioSequence seq = generateOne(66, 1, false, miniScenario());
  Tape t;
  SequenceForward fw = m.forward(t, seq);
  LossTerms lt = sequenceLoss(t, fw, seq, m.config().h, m.config().w);
  const double fv = t.val(lt.focal)[0];
  const double kv = t.val(lt.kl)[0];
  const double sv = t.val(lt.smooth)[0];
  const double tv = t.val(lt.total)[0];
  CHECK(tv == (fv * 1.0 + 0.5 * kv) + 0.1 * sv);
  m.params().flushGrads(t);
}
