#include <doctest.h>

#include <cmath>
#include <vector>

#include "camera/kernels.hpp"
#include "camera/model.hpp"
#include "camera/ops.hpp"
#include "camera/rng.hpp"

using namespace camera;
using namespace camera::ops;

namespace {

ScenarioConfig miniScenario() {
  ScenarioConfig sc;
  sc.T = 8;
  sc.H = sc.W = 16;
  sc.tokenLen = 8;
  return sc;
}

}  // namespace

TEST_CASE("embedMeanPool averages non-pad rows only") {
  Tape t;
  Tensor table({8, 3});
  for (size_t i = 0; i < table.size(); ++i)
    table[i] = static_cast<double>(i) * 0.1;
  Var tab = t.leaf(table);

  // tokens 2 and 5, rest pad
  Var e = embedMeanPool(t, tab, {2, 5, 0, 0});
  const Tensor& ev = t.val(e);
  REQUIRE(ev.size() == 3);
  for (int j = 0; j < 3; ++j) {
    const double expect = 0.5 * (table.at(2, j) + table.at(5, j));
    CHECK(ev[static_cast<size_t>(j)] == doctest::Approx(expect).epsilon(1e-15));
  }

  // all pads -> zero vector
  Var z = embedMeanPool(t, tab, {0, 0, 0});
  for (size_t j = 0; j < 3; ++j) CHECK(t.val(z)[j] == 0.0);

  // out-of-range token id rejected
  CHECK_THROWS_AS(embedMeanPool(t, tab, {9}), InputError);
  CHECK_THROWS_AS(embedMeanPool(t, tab, {-1}), InputError);
}

TEST_CASE("scene encoder downsamples 4x and keeps c channels") {
  Model m(ModelConfig::mini());
  m.init(3);
  const ScenarioSequence seq = generateOne(3, 0, true, miniScenario());
  Tape t;
  SequenceForward fw = m.forward(t, seq);
  REQUIRE(static_cast<int>(fw.frames.size()) == seq.T);
  for (const FrameOutput& fo : fw.frames) {
    const Tensor& ms = t.val(fo.ms);
    CHECK(ms.dim(0) == m.config().h);
    CHECK(ms.dim(1) == m.config().w);
    const double p = t.val(fo.p)[0];
    CHECK(p > 0.0);
    CHECK(p < 1.0);
  }
  m.params().flushGrads(t);
}

TEST_CASE("text tokens change the forward output") {
  Model m(ModelConfig::mini());
  m.init(4);
  ScenarioSequence seq = generateOne(4, 1, true, miniScenario());
  const RiskTrace base = m.run(seq);
  ScenarioSequence alt = seq;
  // swap the driver-state token
  for (int& tok : alt.tokens) {
    if (tok == tokens::kAttentive) tok = tokens::kDistracted;
    else if (tok == tokens::kDistracted) tok = tokens::kAttentive;
  }
  REQUIRE_FALSE(alt.tokens == seq.tokens);
  const RiskTrace other = m.run(alt);
  bool differs = false;
  for (size_t f = 0; f < base.p.size(); ++f)
    if (base.p[f] != other.p[f]) differs = true;
  CHECK(differs);
}

TEST_CASE("attention map changes the forward output") {
  Model m(ModelConfig::mini());
  m.init(5);
  ScenarioSequence seq = generateOne(5, 2, false, miniScenario());
  const RiskTrace base = m.run(seq);
  ScenarioSequence alt = seq;
  for (double& v : alt.maps) v = 1.0 / (seq.H * seq.W);
  const RiskTrace other = m.run(alt);
  bool differs = false;
  for (size_t f = 0; f < base.p.size(); ++f)
    if (base.p[f] != other.p[f]) differs = true;
  CHECK(differs);
}

TEST_CASE("refiner knockout swaps the branch and changes parameters") {
  ModelConfig cfg = ModelConfig::mini();
  Model full(cfg);
  cfg.knockRefiner = true;
  Model knocked(cfg);
  CHECK(full.params().has("enc.att.lift.W"));
  CHECK_FALSE(full.params().has("enc.att.simple.W"));
  CHECK(knocked.params().has("enc.att.simple.W"));
  CHECK_FALSE(knocked.params().has("enc.att.lift.W"));
}

TEST_CASE("forward rejects mismatched grid geometry") {
  Model m(ModelConfig::mini());  // expects 16x16 grids
  m.init(6);
  ScenarioConfig sc;  // 32x32
  sc.T = 8;
  const ScenarioSequence seq = generateOne(6, 0, true, sc);
  Tape t;
  CHECK_THROWS_AS(m.forward(t, seq), InputError);
}

TEST_CASE("model config validation") {
  ModelConfig cfg = ModelConfig::mini();
  cfg.h = 6;  // not a power of two
  cfg.w = 6;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = ModelConfig::mini();
  cfg.gridH = 20;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = ModelConfig::mini();
  cfg.c = 10;  // not a multiple of 4
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = ModelConfig::mini();
  cfg.lambda2Init = 0.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK(ModelConfig::reference().pyramidLevels() == 4);
  CHECK(ModelConfig::mini().pyramidLevels() == 3);
}

TEST_CASE("scalar and AVX2 lanes produce bit-identical forward traces") {
  if (!kern::avx2Available()) {
    MESSAGE("AVX2 unavailable; lane parity not exercised here");
    return;
  }
  Model m(ModelConfig::mini());
  m.init(9);
  const ScenarioSequence seq = generateOne(9, 0, true, miniScenario());

  kern::select("scalar");
  const RiskTrace a = m.run(seq, true);
  kern::select("avx2");
  const RiskTrace b = m.run(seq, true);
  kern::select("auto");

  REQUIRE(a.p.size() == b.p.size());
  for (size_t f = 0; f < a.p.size(); ++f) {
    CHECK(a.p[f] == b.p[f]);
    CHECK(a.tau[f] == b.tau[f]);
    CHECK(a.ms[f] == b.ms[f]);
  }
}
