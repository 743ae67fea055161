#include "camera/model.hpp"

#include <cmath>

namespace camera {

using namespace ops;

ModelConfig ModelConfig::reference() { return ModelConfig{}; }

ModelConfig ModelConfig::mini() {
  ModelConfig m;
  m.gridH = m.gridW = 16;
  m.h = m.w = 4;
  m.c = 8;
  m.c0 = 4;
  m.d = 4;
  m.K = 2;
  return m;
}

int ModelConfig::pyramidLevels() const {
  int levels = 1, s = h;
  while (s > 1) {
    s /= 2;
    ++levels;
  }
  return levels;
}

void ModelConfig::validate() const {
  auto pow2 = [](int v) { return v > 0 && (v & (v - 1)) == 0; };
  if (!pow2(h) || h != w || h < 4) throw ConfigError("h must be a power of two >= 4 and equal w");
  if (gridH != 4 * h || gridW != 4 * w)
    throw ConfigError("grid must be 4x the fused map resolution");
  if (c < 8 || c % 4 != 0) throw ConfigError("c must be a multiple of 4, >= 8");
  if (c0 < 2 || d < 2 || K < 2 || vocab < 32) throw ConfigError("model dims out of range");
  if (c / reduction < 1 || c0 / reduction < 1)
    throw ConfigError("reduction too large for channel width");
  if (lambda1Init < 0.0 || lambda1Init > 0.2 || lambda2Init < 0.0 ||
      lambda2Init > 0.2)
    throw ConfigError("lambda init must be in [0, 0.2]");
}

namespace {

void regConv(ParamStore& s, const std::string& name, int kh, int kw, int cin,
             int cout) {
  s.registerParam(name + ".W", {kh, kw, cin, cout}, kh * kw * cin);
  s.registerParam(name + ".b", {cout}, 0);
}

void regLinear(ParamStore& s, const std::string& name, int out, int in) {
  s.registerParam(name + ".W", {out, in}, in);
  s.registerParam(name + ".b", {out}, 0);
}

Tensor avgPoolTo(const Tensor& m, int h, int w) {
  const int H = m.dim(0), W = m.dim(1);
  const int fy = H / h, fx = W / w;
  Tensor out({h, w, 1});
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      double acc = 0;
      for (int dy = 0; dy < fy; ++dy)
        for (int dx = 0; dx < fx; ++dx) acc += m.at(r * fy + dy, c * fx + dx);
      out[static_cast<size_t>(r * w + c)] = acc / (fy * fx);
    }
  return out;
}

}  // namespace

double adaptiveTau(double entropy, double ctxNorm, double l1, double l2,
                   int c) {
  const double raw = 0.5 + l1 * entropy -
                     l2 * std::tanh(ctxNorm / std::sqrt(static_cast<double>(c)));
  return std::clamp(raw, 0.3, 0.7);
}

double mapEntropy(const Tensor& m) {
  double ent = 0.0;
  for (size_t k = 0; k < m.size(); ++k) ent -= m[k] * std::log(m[k] + 1e-8);
  return ent / std::log(static_cast<double>(m.size()));
}

double attentionEntropy(const Tensor& m) {
  constexpr double kEps = 1e-8;
  double sum = 0.0;
  for (size_t k = 0; k < m.size(); ++k) sum += m[k];
  if (sum <= 0.0) throw InputError("attention map has no mass");
  sum += kEps * static_cast<double>(m.size());
  double ent = 0.0;
  for (size_t k = 0; k < m.size(); ++k) {
    const double q = (m[k] + kEps) / sum;
    ent -= q * std::log(q);
  }
  return ent / std::log(static_cast<double>(m.size()));
}

Model::Model(ModelConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const int c = cfg_.c, c0 = cfg_.c0, d = cfg_.d, L = cfg_.pyramidLevels();

  // scene encoder
  regConv(store_, "enc.scene.conv1", 3, 3, 3, c / 2);
  regConv(store_, "enc.scene.conv2", 3, 3, c / 2, c);
  regConv(store_, "enc.scene.conv3", 3, 3, c, c);

  // text encoder
  store_.registerParam("enc.text.embed", {cfg_.vocab, c}, c);
  regLinear(store_, "enc.text.lin", c, c);
  store_.registerParam("enc.text.pos", {cfg_.h, cfg_.w, c}, c);

  // attention-map refiner (MFE)
  if (cfg_.knockRefiner) {
    regConv(store_, "enc.att.simple", 1, 1, 1, c);
  } else {
    regConv(store_, "enc.att.lift", 3, 3, 1, c0);
    regConv(store_, "enc.att.down1", 3, 3, c0, c0);
    regConv(store_, "enc.att.down2", 3, 3, c0, c0);
    for (int l = 1; l < L; ++l)
      regConv(store_, "enc.att.pyr" + std::to_string(l), 3, 3, c0, c0);
    const int cr = std::max(1, c0 / cfg_.reduction);
    regLinear(store_, "enc.att.ch.l1", cr, c0);
    regLinear(store_, "enc.att.ch.l2", c0, cr);
    regConv(store_, "enc.att.sp", 3, 3, 2, 1);
    store_.registerParam("enc.att.levels", {L}, 0);
    regConv(store_, "enc.att.out", 1, 1, c0, c);
  }

  // hierarchical fusion (AHF) and bottleneck attention (BiBA)
  if (!cfg_.knockFusion) {
    for (int i = 1; i <= 3; ++i) {
      const std::string p = "fusion.m" + std::to_string(i);
      regConv(store_, p + ".proj", 1, 1, c, c);
      for (int l = 1; l < L; ++l)
        regConv(store_, p + ".down" + std::to_string(l), 3, 3, c, c);
      store_.registerParam(p + ".scales", {L}, 0);
    }
    regLinear(store_, "fusion.coat.l1", c, 2 * c);
    regLinear(store_, "fusion.coat.l2", c, c);
    regLinear(store_, "fusion.biba.attnV", cfg_.K, c);
    regLinear(store_, "fusion.biba.attnC", cfg_.K, c);
    for (int k = 0; k < cfg_.K; ++k) {
      regConv(store_, "fusion.biba.vbase" + std::to_string(k), 1, 1, c, c);
      regConv(store_, "fusion.biba.cbase" + std::to_string(k), 1, 1, c, c);
    }
  }

  // temporal
  if (cfg_.knockBiGRU) {
    regLinear(store_, "temporal.mlp", 2 * d, 2 * c);
  } else {
    for (const char* dir : {"fwd", "bwd"}) {
      const std::string p = std::string("gru.") + dir;
      for (const char* g : {"z", "r", "h"}) {
        store_.registerParam(p + ".W" + g, {d, 2 * c}, 2 * c);
        store_.registerParam(p + ".U" + g, {d, d}, d);
        store_.registerParam(p + ".b" + g, {d}, 0);
      }
    }
  }

  // risk head
  regLinear(store_, "risk.psi.l1", c / 2, c);
  regLinear(store_, "risk.psi.l2", c / 4, c / 2);
  regLinear(store_, "risk.head", 1, 2 * d + c / 4);
  store_.registerParam("risk.P", {c, 2 * d}, 2 * d);
  regConv(store_, "risk.Wv", 1, 1, c, c);
  store_.registerParamConst("risk.lambda1", {1}, cfg_.lambda1Init);
  store_.registerParamConst("risk.lambda2", {1}, cfg_.lambda2Init);

  store_.registerParamConst("meta.arch", {15}, 0.0);
  writeMeta();
}

void Model::writeMeta() {
  Tensor& m = store_.param("meta.arch");
  m[0] = cfg_.gridH;
  m[1] = cfg_.gridW;
  m[2] = cfg_.h;
  m[3] = cfg_.w;
  m[4] = cfg_.c;
  m[5] = cfg_.c0;
  m[6] = cfg_.d;
  m[7] = cfg_.K;
  m[8] = cfg_.vocab;
  m[9] = cfg_.reduction;
  m[10] = cfg_.knockRefiner ? 1.0 : 0.0;
  m[11] = cfg_.knockFusion ? 1.0 : 0.0;
  m[12] = cfg_.knockBiGRU ? 1.0 : 0.0;
  m[13] = cfg_.lambda1Init;
  m[14] = cfg_.lambda2Init;
}

Model Model::load(const std::string& path) {
  ParamStore raw;
  raw.load(path);
  if (!raw.has("meta.arch"))
    throw ParseError("checkpoint missing architecture metadata");
  const Tensor& m = raw.param("meta.arch");
  ModelConfig cfg;
  cfg.gridH = static_cast<int>(m[0]);
  cfg.gridW = static_cast<int>(m[1]);
  cfg.h = static_cast<int>(m[2]);
  cfg.w = static_cast<int>(m[3]);
  cfg.c = static_cast<int>(m[4]);
  cfg.c0 = static_cast<int>(m[5]);
  cfg.d = static_cast<int>(m[6]);
  cfg.K = static_cast<int>(m[7]);
  cfg.vocab = static_cast<int>(m[8]);
  cfg.reduction = static_cast<int>(m[9]);
  cfg.knockRefiner = m[10] != 0.0;
  cfg.knockFusion = m[11] != 0.0;
  cfg.knockBiGRU = m[12] != 0.0;
  cfg.lambda1Init = m[13];
  cfg.lambda2Init = m[14];
  Model model(cfg);
  for (auto& [name, tensor] : model.store_.allMutable()) {
    if (!raw.has(name))
      throw ParseError("checkpoint missing parameter: " + name);
    if (!raw.param(name).sameShape(tensor))
      throw ParseError("checkpoint shape mismatch for " + name);
    tensor = raw.param(name);
  }
  return model;
}

Var Model::conv(Tape& t, Var x, const std::string& name, int stride, Pad pad,
                bool reluAct) {
  Var y = conv2d(t, x, store_.use(t, name + ".W"), stride, pad);
  y = addChannelBias(t, y, store_.use(t, name + ".b"));
  return reluAct ? relu(t, y) : y;
}

Var Model::textFeature(Tape& t, const std::vector<int>& tokens) {
  Var e = embedMeanPool(t, store_.use(t, "enc.text.embed"), tokens);
  Var v = linear(t, store_.use(t, "enc.text.lin.W"), e,
                 store_.use(t, "enc.text.lin.b"));
  Var grid = broadcastChannelTo(t, v, cfg_.h, cfg_.w);
  return add(t, grid, store_.use(t, "enc.text.pos"));
}

Var Model::sceneFeature(Tape& t, const Tensor& grid) {
  Var x = t.constant(grid);
  x = conv(t, x, "enc.scene.conv1", 2, Pad::Same, true);
  x = conv(t, x, "enc.scene.conv2", 2, Pad::Same, true);
  return conv(t, x, "enc.scene.conv3", 1, Pad::Same, true);
}

Var Model::attentionFeature(Tape& t, const Tensor& map) {
  if (cfg_.knockRefiner) {
    Var pooled = t.constant(avgPoolTo(map, cfg_.h, cfg_.w));
    return conv(t, pooled, "enc.att.simple", 1, Pad::Same, true);
  }
  Tensor lifted = map;
  lifted.reshape({map.dim(0), map.dim(1), 1});
  Var x = conv(t, t.constant(lifted), "enc.att.lift", 1, Pad::Same, true);
  x = conv(t, x, "enc.att.down1", 2, Pad::Same, true);
  x = conv(t, x, "enc.att.down2", 2, Pad::Same, true);

  const int L = cfg_.pyramidLevels();
  std::vector<Var> levels{x};
  for (int l = 1; l < L; ++l)
    levels.push_back(conv(t, levels.back(), "enc.att.pyr" + std::to_string(l),
                          2, Pad::Same, true));

  // shared channel + spatial attention per level
  std::vector<Var> refined;
  for (Var lv : levels) {
    Var za = globalAvgPool(t, lv), zm = globalMaxPool(t, lv);
    auto mlp = [&](Var z) {
      Var m = relu(t, linear(t, store_.use(t, "enc.att.ch.l1.W"), z,
                             store_.use(t, "enc.att.ch.l1.b")));
      return linear(t, store_.use(t, "enc.att.ch.l2.W"), m,
                    store_.use(t, "enc.att.ch.l2.b"));
    };
    Var ach = sigmoid(t, add(t, mlp(za), mlp(zm)));
    Var xc = mulChannel(t, lv, ach);
    Var stacked = stackMaps2(t, channelAvgPool(t, xc), channelMaxPool(t, xc));
    Var asp = sigmoid(t, conv(t, stacked, "enc.att.sp", 1, Pad::Same, false));
    refined.push_back(mulSpatial(t, xc, channelSum(t, asp)));
  }

  Var weights = softmaxAll(t, store_.use(t, "enc.att.levels"));
  Var fusedLv;
  for (size_t l = 0; l < refined.size(); ++l) {
    Var up = upsampleNearest(t, refined[l], cfg_.h, cfg_.w);
    Var term = scaleVar(t, up, pick(t, weights, static_cast<int>(l)));
    fusedLv = l == 0 ? term : add(t, fusedLv, term);
  }
  return conv(t, fusedLv, "enc.att.out", 1, Pad::Same, true);
}

std::array<Var, 3> Model::fuse(Tape& t, Var mScene, Var mText, Var mAtt) {
  const std::array<Var, 3> mods{mScene, mText, mAtt};
  if (cfg_.knockFusion) {
    Var sum = add(t, add(t, mScene, mText), mAtt);
    Var mean = affine(t, sum, 1.0 / 3.0, 0.0);
    return {mean, mean, mean};
  }
  const int L = cfg_.pyramidLevels();
  std::array<Var, 3> proj, scaled;
  for (int i = 0; i < 3; ++i) {
    const std::string p = "fusion.m" + std::to_string(i + 1);
    proj[static_cast<size_t>(i)] =
        conv(t, mods[static_cast<size_t>(i)], p + ".proj", 1, Pad::Same, false);

    // per-modality scale pyramid, softmax-weighted (HSFA)
    std::vector<Var> levels{proj[static_cast<size_t>(i)]};
    for (int l = 1; l < L; ++l)
      levels.push_back(relu(t, conv(t, levels.back(),
                                    p + ".down" + std::to_string(l), 2,
                                    Pad::Same, false)));
    Var w = softmaxAll(t, store_.use(t, p + ".scales"));
    Var acc;
    for (int l = 0; l < L; ++l) {
      Var up = upsampleNearest(t, levels[static_cast<size_t>(l)], cfg_.h, cfg_.w);
      Var term = scaleVar(t, up, pick(t, w, l));
      acc = l == 0 ? term : add(t, acc, term);
    }
    scaled[static_cast<size_t>(i)] = acc;
  }

  std::array<Var, 3> g;
  for (int i = 0; i < 3; ++i)
    g[static_cast<size_t>(i)] = globalAvgPool(t, scaled[static_cast<size_t>(i)]);

  // cross-modal gates (CoAT): beta from a shared pair MLP, gamma from the
  // cosine alignment of the pooled descriptors
  Var fused;
  int nPairs = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      if (i == j) continue;
      Var gi = g[static_cast<size_t>(i)], gj = g[static_cast<size_t>(j)];
      Var pair = concatVec(t, gi, gj);
      Var hid = relu(t, linear(t, store_.use(t, "fusion.coat.l1.W"), pair,
                               store_.use(t, "fusion.coat.l1.b")));
      Var beta = sigmoid(t, linear(t, store_.use(t, "fusion.coat.l2.W"), hid,
                                   store_.use(t, "fusion.coat.l2.b")));
      Var dot = sumAll(t, mul(t, gi, gj));
      Var ni = sqrtv(t, affine(t, sumAll(t, mul(t, gi, gi)), 1.0, 1e-16));
      Var nj = sqrtv(t, affine(t, sumAll(t, mul(t, gj, gj)), 1.0, 1e-16));
      Var gamma = affine(t, divv(t, dot, mul(t, ni, nj)), 0.5, 0.5);
      Var term = mulChannel(
          t, scaleVar(t, proj[static_cast<size_t>(i)], gamma), beta);
      fused = nPairs == 0 ? term : add(t, fused, term);
      ++nPairs;
    }
  fused = affine(t, fused, 1.0 / nPairs, 0.0);
  Var skip = add(t, add(t, proj[0], proj[1]), proj[2]);
  fused = add(t, fused, affine(t, skip, 1.0 / 3.0, 0.0));

  // bottleneck base attention (BiBA): separate visual- and context-centric
  // decompositions of the fused map, each a softmax mixture of K learned
  // 1x1 bases gated by the pooled descriptor
  Var pooled = globalAvgPool(t, fused);
  auto decompose = [&](const std::string& head, const std::string& base) {
    Var alpha = softmaxAll(
        t, linear(t, store_.use(t, "fusion.biba." + head + ".W"), pooled,
                  store_.use(t, "fusion.biba." + head + ".b")));
    Var acc;
    for (int k = 0; k < cfg_.K; ++k) {
      Var b = conv(t, fused, "fusion.biba." + base + std::to_string(k), 1,
                   Pad::Same, false);
      Var term = scaleVar(t, b, pick(t, alpha, k));
      acc = k == 0 ? term : add(t, acc, term);
    }
    return acc;
  };
  Var visual = decompose("attnV", "vbase");
  Var ctx = decompose("attnC", "cbase");
  return {fused, visual, ctx};
}

SequenceForward Model::forward(Tape& t, const ScenarioSequence& seq) {
  if (seq.H != cfg_.gridH || seq.W != cfg_.gridW)
    throw InputError("sequence grid does not match model geometry");
  const int T = seq.T, d = cfg_.d;

  Var mText = textFeature(t, seq.tokens);

  std::vector<Var> xs, visuals, ctxMaps, ctxVecs;
  xs.reserve(static_cast<size_t>(T));
  for (int f = 0; f < T; ++f) {
    Var mScene = sceneFeature(t, seq.gridAt(f));
    Var mAtt = attentionFeature(t, seq.mapAt(f));
    auto [fused, visual, ctxMap] = fuse(t, mScene, mText, mAtt);
    // temporal input: pooled visual and context descriptors, 2c dims
    xs.push_back(
        concatVec(t, globalAvgPool(t, visual), globalAvgPool(t, ctxMap)));
    visuals.push_back(visual);
    ctxMaps.push_back(ctxMap);
    ctxVecs.push_back(globalAvgPool(t, ctxMap));
  }

  // temporal context
  std::vector<Var> hf(static_cast<size_t>(T)), hb(static_cast<size_t>(T));
  if (cfg_.knockBiGRU) {
    for (int f = 0; f < T; ++f) {
      Var h = relu(t, linear(t, store_.use(t, "temporal.mlp.W"),
                             xs[static_cast<size_t>(f)],
                             store_.use(t, "temporal.mlp.b")));
      hf[static_cast<size_t>(f)] = h;  // full 2d vector; hb stays unused
    }
  } else {
    auto cell = [&](const std::string& p, Var x, Var h) {
      auto gate = [&](const char* g, Var hh) {
        Var wx = linear(t, store_.use(t, p + ".W" + g), x,
                        store_.use(t, p + ".b" + g));
        Var uh = linear(t, store_.use(t, p + ".U" + g), hh);
        return add(t, wx, uh);
      };
      Var z = sigmoid(t, gate("z", h));
      Var r = sigmoid(t, gate("r", h));
      Var hc = tanhv(t, gate("h", mul(t, r, h)));
      Var keep = mul(t, affine(t, z, -1.0, 1.0), h);
      return add(t, keep, mul(t, z, hc));
    };
    Var h0 = t.constant(Tensor({d}));
    Var h = h0;
    for (int f = 0; f < T; ++f) {
      h = cell("gru.fwd", xs[static_cast<size_t>(f)], h);
      hf[static_cast<size_t>(f)] = h;
    }
    if (cfg_.causal) {
      for (int f = 0; f < T; ++f) hb[static_cast<size_t>(f)] = h0;
    } else {
      h = h0;
      for (int f = T - 1; f >= 0; --f) {
        h = cell("gru.bwd", xs[static_cast<size_t>(f)], h);
        hb[static_cast<size_t>(f)] = h;
      }
    }
  }

  const double l1 = lambda1(), l2 = lambda2();
  SequenceForward out;
  out.frames.resize(static_cast<size_t>(T));
  for (int f = 0; f < T; ++f) {
    const size_t i = static_cast<size_t>(f);
    Var hg = cfg_.knockBiGRU ? hf[i] : concatVec(t, hf[i], hb[i]);
    Var psi = relu(t, linear(t, store_.use(t, "risk.psi.l1.W"), ctxVecs[i],
                             store_.use(t, "risk.psi.l1.b")));
    psi = relu(t, linear(t, store_.use(t, "risk.psi.l2.W"), psi,
                         store_.use(t, "risk.psi.l2.b")));
    Var logit = linear(t, store_.use(t, "risk.head.W"), concatVec(t, hg, psi),
                       store_.use(t, "risk.head.b"));
    FrameOutput& fo = out.frames[i];
    fo.p = pick(t, sigmoid(t, logit), 0);
    fo.ctxVec = ctxVecs[i];

    Var proj = linear(t, store_.use(t, "risk.P"), hg);
    Var gate = broadcastChannelTo(t, proj, cfg_.h, cfg_.w);
    Var vis = conv(t, visuals[i], "risk.Wv", 1, Pad::Same, false);
    fo.ms = softmaxAll(t, channelSum(t, mul(t, gate, vis)));

    // entropy and adaptive threshold computed on values only; the
    // uncertainty term reads the driver-attention input, not the risk map
    const Tensor& cv = t.val(fo.ctxVec);
    double norm = 0.0;
    for (size_t k = 0; k < cv.size(); ++k) norm += cv[k] * cv[k];
    norm = std::sqrt(norm);
    fo.entropy = attentionEntropy(seq.mapAt(f));
    fo.tau = adaptiveTau(fo.entropy, norm, l1, l2, cfg_.c);
  }
  return out;
}

RiskTrace Model::run(const ScenarioSequence& seq, bool keepMaps) {
  Tape t;
  SequenceForward fw = forward(t, seq);
  RiskTrace tr;
  tr.p.reserve(fw.frames.size());
  for (const FrameOutput& fo : fw.frames) {
    tr.p.push_back(t.val(fo.p)[0]);
    tr.entropy.push_back(fo.entropy);
    tr.tau.push_back(fo.tau);
    if (keepMaps) tr.ms.push_back(t.val(fo.ms));
  }
  store_.flushGrads(t);  // drop bindings without accumulating
  store_.zeroGrads();
  return tr;
}

}  // namespace camera
