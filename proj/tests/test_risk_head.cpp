#include <doctest.h>

#include <cmath>

#include "camera/model.hpp"
#include "camera/rng.hpp"

using namespace camera;

TEST_CASE("adaptive threshold is exactly 0.5 when both coefficients vanish") {
  Rng rng(51);
  for (int i = 0; i < 10000; ++i) {
    const double e = rng.uniform(0.0, 1.0);
    const double n = rng.uniform(0.0, 50.0);
    CHECK(adaptiveTau(e, n, 0.0, 0.0, 16) == 0.5);
  }
}

TEST_CASE("adaptive threshold is clamped to [0.3, 0.7]") {
  Rng rng(52);
  for (int i = 0; i < 10000; ++i) {
    const double tau = adaptiveTau(rng.uniform(0.0, 1.5), rng.uniform(0.0, 99.0),
                                   rng.uniform(0.0, 0.2), rng.uniform(0.0, 0.2),
                                   16);
    CHECK(tau >= 0.3);
    CHECK(tau <= 0.7);
  }
  CHECK(adaptiveTau(100.0, 0.0, 0.2, 0.0, 16) == 0.7);
  CHECK(adaptiveTau(0.0, 1e9, 0.0, 0.2, 16) == doctest::Approx(0.3));
}

TEST_CASE("adaptive threshold is weakly increasing in entropy") {
  Rng rng(53);
  for (int i = 0; i < 10000; ++i) {
    const double n = rng.uniform(0.0, 20.0);
    const double l1 = rng.uniform(0.0, 0.2), l2 = rng.uniform(0.0, 0.2);
    double e1 = rng.uniform(0.0, 1.0), e2 = rng.uniform(0.0, 1.0);
    if (e1 > e2) std::swap(e1, e2);
    CHECK(adaptiveTau(e1, n, l1, l2, 16) <= adaptiveTau(e2, n, l1, l2, 16));
  }
}

TEST_CASE("adaptive threshold is weakly decreasing in context norm") {
  Rng rng(54);
  for (int i = 0; i < 10000; ++i) {
    const double e = rng.uniform(0.0, 1.0);
    const double l1 = rng.uniform(0.0, 0.2), l2 = rng.uniform(0.0, 0.2);
    double n1 = rng.uniform(0.0, 20.0), n2 = rng.uniform(0.0, 20.0);
    if (n1 > n2) std::swap(n1, n2);
    CHECK(adaptiveTau(e, n1, l1, l2, 16) >= adaptiveTau(e, n2, l1, l2, 16));
  }
}

TEST_CASE("map entropy: uniform is maximal, one-hot is minimal") {
  const int n = 8;
  Tensor uniform({n, n}, 1.0 / (n * n));
  const double eu = mapEntropy(uniform);
  CHECK(eu == doctest::Approx(1.0).epsilon(1e-6));

  Tensor hot({n, n});
  hot[5] = 1.0;
  const double eh = mapEntropy(hot);
  CHECK(eh < 1e-6);
  CHECK(eh >= -1e-8);  // epsilon floor in the entropy can dip just below zero

  Tensor mixed({n, n});
  mixed[0] = 0.5;
  mixed[1] = 0.5;
  const double em = mapEntropy(mixed);
  CHECK(em > eh);
  CHECK(em < eu);
}

TEST_CASE("attention entropy normalizes raw maps") {
  Tensor uniform({8, 8}, 0.37);  // any positive constant
  CHECK(attentionEntropy(uniform) == doctest::Approx(1.0).epsilon(1e-9));
  Tensor hot({8, 8});
  hot.at(2, 5) = 1.0;
  CHECK(attentionEntropy(hot) <= 1e-5);
  CHECK(attentionEntropy(hot) >= 0.0);
  Tensor half({2, 2});
  half.at(0, 0) = 0.5;
  half.at(1, 1) = 0.5;
  CHECK(attentionEntropy(half) == doctest::Approx(0.5).epsilon(1e-6));
  // scale invariance: normalization removes the overall gain
  Tensor halfScaled({2, 2});
  halfScaled.at(0, 0) = 5.0;
  halfScaled.at(1, 1) = 5.0;
  CHECK(attentionEntropy(halfScaled) ==
        doctest::Approx(attentionEntropy(half)).epsilon(1e-6));
  Tensor zero({4, 4});
  CHECK_THROWS_AS(attentionEntropy(zero), InputError);
}

TEST_CASE("per-frame thresholds come from the frame's own map and context") {
  ScenarioConfig sc;
  sc.T = 8;
  sc.H = sc.W = 16;
  sc.tokenLen = 8;
  Model m(ModelConfig::mini());
  m.init(55);
  const ScenarioSequence seq = generateOne(55, 0, true, sc);
  const RiskTrace tr = m.run(seq, true);
  REQUIRE(tr.ms.size() == tr.tau.size());
  const double l1 = m.lambda1(), l2 = m.lambda2();
  CHECK(l1 == doctest::Approx(0.1));
  CHECK(l2 == doctest::Approx(0.2));
  for (size_t f = 0; f < tr.tau.size(); ++f) {
    // the uncertainty term reads the driver-attention input map
    CHECK(tr.entropy[f] ==
          doctest::Approx(attentionEntropy(seq.mapAt(static_cast<int>(f))))
              .epsilon(1e-12));
    CHECK(tr.tau[f] >= 0.3);
    CHECK(tr.tau[f] <= 0.7);
    // reconstructing tau requires the context norm; check monotone bound only
    CHECK(tr.tau[f] <= 0.5 + l1 * tr.entropy[f] + 1e-12);
  }
}

TEST_CASE("risk maps are distributions") {
  ScenarioConfig sc;
  sc.T = 8;
  sc.H = sc.W = 16;
  sc.tokenLen = 8;
  Model m(ModelConfig::mini());
  m.init(56);
  const RiskTrace tr = m.run(generateOne(56, 1, false, sc), true);
  for (const Tensor& ms : tr.ms) {
    double sum = 0.0;
    for (size_t i = 0; i < ms.size(); ++i) {
      CHECK(ms[i] > 0.0);
      sum += ms[i];
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}
