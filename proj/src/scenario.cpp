#include "camera/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include "camera/params.hpp"
#include "camera/rng.hpp"

namespace camera {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr uint32_t kScenarioVersion = 1;
const char kMagic[4] = {'C', 'A', 'M', 'S'};

struct ClassSpec {
  double width, length, vmin, vmax;
};

ClassSpec classSpec(AgentClass c) {
  switch (c) {
    case AgentClass::Pedestrian: return {0.6, 0.6, 1.2, 2.5};
    case AgentClass::Car:        return {1.8, 4.2, 3.0, 8.0};
    case AgentClass::Motorcycle: return {0.8, 2.0, 3.0, 8.0};
    case AgentClass::Bus:        return {2.5, 10.0, 3.0, 6.0};
    case AgentClass::Cyclist:    return {0.6, 1.8, 2.0, 4.5};
  }
  return {1.8, 4.2, 3.0, 8.0};
}

struct RegimeParams {
  int minAgents, maxAgents;
  double distractedFraction;
  double sigmaAttentive, sigmaDistracted;
  double missLo, missHi;
};

RegimeParams regimeParams(const ScenarioConfig& cfg) {
  switch (cfg.regime) {
    case Regime::Benign:
      return {1, 2, 0.0, 3.5, 4.0, 4.5, 6.5};
    case Regime::Hazard:
      return {5, 7, 0.0, 0.6, 4.0, 2.0, 4.5};
    case Regime::Mixed:
    default:
      // near-miss band stays above the coarse occupancy-grid cell size so
      // negatives remain separable from hits
      return {2, 5, cfg.distractedFraction, 1.5, 4.0, 3.5, 6.5};
  }
}

int firstCollisionFrame(const Agent& a, int T, double radius) {
  for (int t = 0; t < T; ++t)
    if (std::hypot(a.x[static_cast<size_t>(t)], a.z[static_cast<size_t>(t)]) <= radius)
      return t;
  return -1;
}

// Straight line at speed v from p0 in direction (ux,uz); freezes at the
// first frame the collision predicate fires (crash comes to rest).
void fillLinear(Agent& a, int T, int fps, double x0, double z0, double ux,
                double uz, double v, double freezeRadius) {
  a.x.assign(static_cast<size_t>(T), 0.0);
  a.z.assign(static_cast<size_t>(T), 0.0);
  a.vx.assign(static_cast<size_t>(T), 0.0);
  a.vz.assign(static_cast<size_t>(T), 0.0);
  bool frozen = false;
  double fx = 0, fz = 0;
  for (int t = 0; t < T; ++t) {
    const size_t i = static_cast<size_t>(t);
    if (frozen) {
      a.x[i] = fx;
      a.z[i] = fz;
      continue;
    }
    const double s = v * t / fps;
    a.x[i] = x0 + ux * s;
    a.z[i] = z0 + uz * s;
    a.vx[i] = ux * v;
    a.vz[i] = uz * v;
    if (freezeRadius > 0 && std::hypot(a.x[i], a.z[i]) <= freezeRadius) {
      frozen = true;
      fx = a.x[i];
      fz = a.z[i];
      a.vx[i] = 0;
      a.vz[i] = 0;
    }
  }
}

// Constant deceleration to rest at stop distance.
void fillDecelerating(Agent& a, int T, int fps, double x0, double z0,
                      double ux, double uz, double v, double stopDist) {
  const double D = std::hypot(x0, z0);
  const double brakeLen = std::max(0.5, D - stopDist);
  const double acc = v * v / (2.0 * brakeLen);
  const double ts = v / acc;
  a.x.assign(static_cast<size_t>(T), 0.0);
  a.z.assign(static_cast<size_t>(T), 0.0);
  a.vx.assign(static_cast<size_t>(T), 0.0);
  a.vz.assign(static_cast<size_t>(T), 0.0);
  for (int t = 0; t < T; ++t) {
    const size_t i = static_cast<size_t>(t);
    const double tt = static_cast<double>(t) / fps;
    double s, speed;
    if (tt >= ts) {
      s = brakeLen;
      speed = 0.0;
    } else {
      s = v * tt - 0.5 * acc * tt * tt;
      speed = v - acc * tt;
    }
    a.x[i] = x0 + ux * s;
    a.z[i] = z0 + uz * s;
    a.vx[i] = ux * speed;
    a.vz[i] = uz * speed;
  }
}

double minDistToEgo(const Agent& a, int T) {
  double best = 1e300;
  for (int t = 0; t < T; ++t)
    best = std::min(best, std::hypot(a.x[static_cast<size_t>(t)],
                                     a.z[static_cast<size_t>(t)]));
  return best;
}

void paintRect(std::vector<double>& grid, int H, int W, double x, double z,
               double w, double l, double ch1v, double ch2v) {
  // world: x in [-20,20], z in [0,60]; ego at bottom center
  const double cellX = 40.0 / W, cellZ = 60.0 / H;
  const double colC = (x + 20.0) / cellX;
  const double rowC = (60.0 - z) / cellZ;
  const double halfW = std::max(0.5, w / 2.0 / cellX);
  const double halfL = std::max(0.5, l / 2.0 / cellZ);
  const int r0 = std::max(0, static_cast<int>(std::floor(rowC - halfL)));
  const int r1 = std::min(H - 1, static_cast<int>(std::floor(rowC + halfL)));
  const int c0 = std::max(0, static_cast<int>(std::floor(colC - halfW)));
  const int c1 = std::min(W - 1, static_cast<int>(std::floor(colC + halfW)));
  for (int r = r0; r <= r1; ++r)
    for (int c = c0; c <= c1; ++c) {
      double* cell = grid.data() + (static_cast<size_t>(r) * W + c) * 3;
      cell[0] = std::max(cell[0], 1.0);
      cell[1] = std::max(cell[1], ch1v);
      cell[2] = std::max(cell[2], ch2v);
    }
}

}  // namespace

const char* agentClassName(AgentClass c) {
  switch (c) {
    case AgentClass::Pedestrian: return "Pedestrian";
    case AgentClass::Car: return "Car";
    case AgentClass::Motorcycle: return "Motorcycle";
    case AgentClass::Bus: return "Bus";
    case AgentClass::Cyclist: return "Cyclist";
  }
  return "Agent";
}

namespace tokens {
const char* name(int id) {
  switch (id) {
    case kPad: return "<pad>";
    case 1: return "pedestrian";
    case 2: return "car";
    case 3: return "motorcycle";
    case 4: return "bus";
    case 5: return "cyclist";
    case kCrossing: return "crossing";
    case kClosing: return "closing";
    case kStopping: return "stopping";
    case kPassing: return "passing";
    case kDensityLow: return "light-traffic";
    case kDensityMedium: return "moderate-traffic";
    case kDensityHigh: return "dense-traffic";
    case kClear: return "clear";
    case kRain: return "rain";
    case kFog: return "fog";
    case kNight: return "night";
    case kUrban: return "urban";
    case kHighway: return "highway";
    case kIntersection: return "intersection";
    case kAttentive: return "attentive";
    case kDistracted: return "distracted";
    default: return "<unused>";
  }
}
}  // namespace tokens

void ScenarioConfig::validate() const {
  if (T < 8 || fps < 1 || H < 8 || W < 8 || tokenLen < 8 || vocab < 32)
    throw ConfigError("scenario config out of range");
  if (collisionRadius <= 0) throw ConfigError("collision radius must be > 0");
  if (distractedFraction < 0 || distractedFraction > 1)
    throw ConfigError("distracted fraction must be in [0,1]");
}

Tensor ScenarioSequence::gridAt(int t) const {
  Tensor g({H, W, 3});
  const size_t n = static_cast<size_t>(H) * W * 3;
  std::copy_n(grids.begin() + static_cast<long>(n) * t, n, g.vec().begin());
  return g;
}

Tensor ScenarioSequence::mapAt(int t) const {
  Tensor m({H, W});
  const size_t n = static_cast<size_t>(H) * W;
  std::copy_n(maps.begin() + static_cast<long>(n) * t, n, m.vec().begin());
  return m;
}

ScenarioSequence generateOne(uint64_t seed, uint64_t index, bool positive,
                             const ScenarioConfig& cfg,
                             std::optional<bool> forceDistracted) {
  cfg.validate();
  Rng rng = Rng::substream(seed, index);
  const RegimeParams rp = regimeParams(cfg);

  ScenarioSequence seq;
  seq.T = cfg.T;
  seq.fps = cfg.fps;
  seq.H = cfg.H;
  seq.W = cfg.W;
  seq.label = positive;
  seq.hazardAgent = 0;

  // scene context draws (fixed order for determinism)
  const int sceneToken =
      tokens::kUrban + static_cast<int>(rng.below(3));  // urban/highway/intersection
  const double wq = rng.uniform();
  int weatherToken;
  double weatherFactor;
  if (wq < 0.55) {
    weatherToken = tokens::kClear;
    weatherFactor = 1.0;
  } else if (wq < 0.75) {
    weatherToken = tokens::kRain;
    weatherFactor = 0.85;
  } else if (wq < 0.9) {
    weatherToken = tokens::kFog;
    weatherFactor = 0.7;
  } else {
    weatherToken = tokens::kNight;
    weatherFactor = 0.6;
  }
  const int nAgents =
      rp.minAgents +
      static_cast<int>(rng.below(static_cast<uint64_t>(rp.maxAgents - rp.minAgents + 1)));

  // focus agent: collision-course hazard for positives, near-miss distractor
  // for negatives
  Agent focus;
  focus.cls = static_cast<AgentClass>(rng.below(5));
  const ClassSpec cs = classSpec(focus.cls);
  focus.width = cs.width;
  focus.length = cs.length;
  const double v = rng.uniform(cs.vmin, cs.vmax);
  const int tTarget = 28 + static_cast<int>(rng.below(static_cast<uint64_t>(cfg.T - 4 - 28 + 1)));
  const double D =
      cfg.collisionRadius + v * (tTarget - 0.5) / cfg.fps;
  const double thetaMax =
      std::min(50.0 * kPi / 180.0, std::asin(std::min(1.0, 19.5 / D)));
  const double theta = rng.uniform(-thetaMax, thetaMax);
  const double x0 = D * std::sin(theta);
  const double z0 = D * std::cos(theta);
  int behaviorToken;
  if (positive) {
    // straight at the ego; stepwise scan determines the accident frame
    fillLinear(focus, cfg.T, cfg.fps, x0, z0, -std::sin(theta),
               -std::cos(theta), v, cfg.collisionRadius);
    seq.t_accident = firstCollisionFrame(focus, cfg.T, cfg.collisionRadius);
    behaviorToken = std::fabs(theta) > 25.0 * kPi / 180.0 ? tokens::kCrossing
                                                          : tokens::kClosing;
  } else {
    const int variant = static_cast<int>(rng.below(2));
    const double miss = rng.uniform(rp.missLo, rp.missHi);
    if (variant == 0) {
      // pass-by: rotate the approach direction so the closest approach
      // distance equals `miss`
      const double side = rng.bernoulli(0.5) ? 1.0 : -1.0;
      const double alpha = side * std::asin(std::min(1.0, miss / D));
      const double ux = -std::sin(theta - alpha);
      const double uz = -std::cos(theta - alpha);
      fillLinear(focus, cfg.T, cfg.fps, x0, z0, ux, uz, v, 0.0);
      behaviorToken =
          cfg.regime == Regime::Benign ? tokens::kPassing : tokens::kClosing;
    } else {
      fillDecelerating(focus, cfg.T, cfg.fps, x0, z0, -std::sin(theta),
                       -std::cos(theta), v, std::max(2.5, miss));
      behaviorToken = tokens::kStopping;
    }
    seq.t_accident = -1;
  }
  seq.agents.push_back(focus);

  // background agents
  for (int i = 1; i < nAgents; ++i) {
    Agent bg;
    bg.cls = static_cast<AgentClass>(rng.below(5));
    const ClassSpec bcs = classSpec(bg.cls);
    bg.width = bcs.width;
    bg.length = bcs.length;
    double bx = 0, bz = 0;
    for (int attempt = 0; attempt < 20; ++attempt) {
      bx = rng.uniform(-20.0, 20.0);
      bz = rng.uniform(4.0, 58.0);
      if (std::hypot(bx, bz) >= 6.0) break;
      bx = 15.0;
      bz = 50.0;
    }
    const double speed = rng.uniform(0.0, 2.0);
    const double dir = rng.uniform(0.0, 2.0 * kPi);
    fillLinear(bg, cfg.T, cfg.fps, bx, bz, std::sin(dir), std::cos(dir), speed,
               0.0);
    if (minDistToEgo(bg, cfg.T) < 2.5)
      fillLinear(bg, cfg.T, cfg.fps, bx, bz, 0.0, 1.0, 0.0, 0.0);  // park it
    seq.agents.push_back(bg);
  }

  bool distracted = rng.bernoulli(rp.distractedFraction);
  if (forceDistracted.has_value()) distracted = *forceDistracted;
  seq.distracted = distracted;

  // tokens
  seq.tokens.assign(static_cast<size_t>(cfg.tokenLen), tokens::kPad);
  {
    size_t k = 0;
    auto put = [&](int id) {
      if (k < seq.tokens.size()) seq.tokens[k++] = id;
    };
    put(sceneToken);
    put(weatherToken);
    put(nAgents <= 2 ? tokens::kDensityLow
                     : (nAgents <= 4 ? tokens::kDensityMedium
                                     : tokens::kDensityHigh));
    put(distracted ? tokens::kDistracted : tokens::kAttentive);
    put(tokens::kClassBase + static_cast<int>(focus.cls));
    put(behaviorToken);
    for (size_t i = 1; i < seq.agents.size(); ++i)
      put(tokens::kClassBase + static_cast<int>(seq.agents[i].cls));
  }

  // render grids and attention maps
  const size_t gridFrame = static_cast<size_t>(cfg.H) * cfg.W * 3;
  const size_t mapFrame = static_cast<size_t>(cfg.H) * cfg.W;
  seq.grids.assign(gridFrame * static_cast<size_t>(cfg.T), 0.0);
  seq.maps.assign(mapFrame * static_cast<size_t>(cfg.T), 0.0);
  const double sigma = distracted ? rp.sigmaDistracted : rp.sigmaAttentive;
  double driftX = 0.0, driftY = 0.0;
  const double cellX = 40.0 / cfg.W, cellZ = 60.0 / cfg.H;
  for (int t = 0; t < cfg.T; ++t) {
    std::vector<double> frame(gridFrame, 0.0);
    for (const Agent& a : seq.agents) {
      const size_t ti = static_cast<size_t>(t);
      const double speed = std::hypot(a.vx[ti], a.vz[ti]);
      if (a.z[ti] < -2.0 || a.z[ti] > 62.0 || std::fabs(a.x[ti]) > 22.0)
        continue;
      paintRect(frame, cfg.H, cfg.W, a.x[ti], a.z[ti], a.width, a.length,
                (static_cast<double>(a.cls) + 1.0) / 5.0,
                std::min(1.0, speed / 10.0));
    }
    // ego marker
    for (int r = cfg.H - 2; r < cfg.H; ++r)
      for (int c = cfg.W / 2 - 1; c <= cfg.W / 2; ++c) {
        double* cell = frame.data() + (static_cast<size_t>(r) * cfg.W + c) * 3;
        cell[0] = std::max(cell[0], 0.3);
        cell[2] = std::max(cell[2], 0.25);
      }
    for (size_t i = 0; i < gridFrame; ++i) {
      const double f = (i % 3 != 2) ? weatherFactor : 1.0;
      seq.grids[gridFrame * static_cast<size_t>(t) + i] = frame[i] * f;
    }

    // attention: tracks the focus agent, or drifts when distracted
    const Agent& f = seq.agents[0];
    const size_t ti = static_cast<size_t>(t);
    double colC = (f.x[ti] + 20.0) / cellX;
    double rowC = (60.0 - f.z[ti]) / cellZ;
    if (distracted) {
      driftX = std::clamp(driftX + rng.uniform(-1.5, 1.5), -12.0, 12.0);
      driftY = std::clamp(driftY + rng.uniform(-1.5, 1.5), -12.0, 12.0);
      colC += driftX;
      rowC += driftY;
    }
    colC = std::clamp(colC, 0.0, static_cast<double>(cfg.W - 1));
    rowC = std::clamp(rowC, 0.0, static_cast<double>(cfg.H - 1));
    double* map = seq.maps.data() + mapFrame * static_cast<size_t>(t);
    for (int r = 0; r < cfg.H; ++r)
      for (int c = 0; c < cfg.W; ++c) {
        const double d2 = (r - rowC) * (r - rowC) + (c - colC) * (c - colC);
        map[static_cast<size_t>(r) * cfg.W + c] =
            std::exp(-d2 / (2.0 * sigma * sigma)) + 1e-4;
      }
  }
  return seq;
}

std::vector<ScenarioSequence> generate(uint64_t seed, int count,
                                       double positiveFraction,
                                       const ScenarioConfig& cfg) {
  if (count <= 0) throw ConfigError("count must be > 0");
  if (positiveFraction < 0.0 || positiveFraction > 1.0)
    throw ConfigError("positive fraction must be in [0,1]");
  cfg.validate();
  const int nPos = static_cast<int>(std::llround(count * positiveFraction));
  std::vector<ScenarioSequence> out;
  out.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i)
    out.push_back(generateOne(seed, static_cast<uint64_t>(i), i < nPos, cfg));
  return out;
}

std::vector<ScenarioSequence> generateStressSet(uint64_t seed, int count,
                                                const ScenarioConfig& base) {
  const int half = count / 2;
  ScenarioConfig benign = base;
  benign.regime = Regime::Benign;
  ScenarioConfig hazard = base;
  hazard.regime = Regime::Hazard;
  std::vector<ScenarioSequence> out;
  out.reserve(static_cast<size_t>(count));
  for (int i = 0; i < half; ++i)
    out.push_back(generateOne(seed, static_cast<uint64_t>(i), false, benign));
  for (int i = half; i < count; ++i)
    out.push_back(generateOne(seed, static_cast<uint64_t>(i), true, hazard));
  return out;
}

std::vector<double> labelFrames(const ScenarioSequence& seq, double window_s) {
  std::vector<double> y(static_cast<size_t>(seq.T), 0.0);
  if (!seq.label || seq.t_accident < 0) return y;
  const int start = std::max(
      0, seq.t_accident - static_cast<int>(std::llround(window_s * seq.fps)));
  for (int t = start; t <= seq.t_accident && t < seq.T; ++t)
    y[static_cast<size_t>(t)] = 1.0;
  return y;
}

namespace {

struct Writer {
  std::ofstream os;
  explicit Writer(const std::string& path) : os(path, std::ios::binary) {
    if (!os) throw std::runtime_error("cannot open for write: " + path);
  }
  void bytes(const void* p, size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  }
  void u8(uint8_t v) { bytes(&v, 1); }
  void u16(uint16_t v) {
    unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>(v >> 8)};
    bytes(b, 2);
  }
  void u32(uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 4);
  }
  void i32(int32_t v) { u32(static_cast<uint32_t>(v)); }
  void f64(double d) {
    uint64_t v;
    std::memcpy(&v, &d, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    bytes(b, 8);
  }
};

struct Reader {
  std::ifstream is;
  size_t offset = 0;
  explicit Reader(const std::string& path) : is(path, std::ios::binary) {
    if (!is) throw std::runtime_error("cannot open: " + path);
  }
  void bytes(void* p, size_t n) {
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(is.gcount()) != n)
      throw ParseError("scenario file truncated at byte offset " +
                       std::to_string(offset));
    offset += n;
  }
  uint8_t u8() {
    uint8_t v;
    bytes(&v, 1);
    return v;
  }
  uint16_t u16() {
    unsigned char b[2];
    bytes(b, 2);
    return static_cast<uint16_t>(b[0] | (b[1] << 8));
  }
  uint32_t u32() {
    unsigned char b[4];
    bytes(b, 4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
    return v;
  }
  int32_t i32() { return static_cast<int32_t>(u32()); }
  double f64() {
    unsigned char b[8];
    bytes(b, 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    double d;
    std::memcpy(&d, &v, 8);
    return d;
  }
};

}  // namespace

void saveScenarios(const std::string& path,
                   const std::vector<ScenarioSequence>& seqs) {
  Writer w(path);
  w.bytes(kMagic, 4);
  w.u32(kScenarioVersion);
  w.u32(static_cast<uint32_t>(seqs.size()));
  for (const ScenarioSequence& s : seqs) {
    const size_t recordLen =
        1 + 1 + 4 + 4 + 2 * 4 + 2 + s.tokens.size() * 2 +
        (s.grids.size() + s.maps.size()) * 8 + 2 +
        s.agents.size() * (1 + 16 + static_cast<size_t>(s.T) * 32);
    w.u32(static_cast<uint32_t>(recordLen));
    w.u8(s.label ? 1 : 0);
    w.u8(s.distracted ? 1 : 0);
    w.i32(s.t_accident);
    w.i32(s.hazardAgent);
    w.u16(static_cast<uint16_t>(s.T));
    w.u16(static_cast<uint16_t>(s.H));
    w.u16(static_cast<uint16_t>(s.W));
    w.u16(static_cast<uint16_t>(s.fps));
    w.u16(static_cast<uint16_t>(s.tokens.size()));
    for (int tok : s.tokens) w.u16(static_cast<uint16_t>(tok));
    for (double g : s.grids) w.f64(g);
    for (double m : s.maps) w.f64(m);
    w.u16(static_cast<uint16_t>(s.agents.size()));
    for (const Agent& a : s.agents) {
      w.u8(static_cast<uint8_t>(a.cls));
      w.f64(a.width);
      w.f64(a.length);
      for (int t = 0; t < s.T; ++t) {
        const size_t i = static_cast<size_t>(t);
        w.f64(a.x[i]);
        w.f64(a.z[i]);
        w.f64(a.vx[i]);
        w.f64(a.vz[i]);
      }
    }
  }
  if (!w.os) throw std::runtime_error("write failed: " + path);
}

std::vector<ScenarioSequence> loadScenarios(const std::string& path) {
  Reader r(path);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw ParseError("not a CAMS scenario file (bad magic at byte offset 0)");
  const uint32_t version = r.u32();
  if (version != kScenarioVersion)
    throw VersionError("unsupported scenario file version " +
                       std::to_string(version));
  const uint32_t count = r.u32();
  std::vector<ScenarioSequence> out;
  out.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    const size_t recordStart = r.offset;
    const uint32_t recordLen = r.u32();
    ScenarioSequence s;
    s.label = r.u8() != 0;
    s.distracted = r.u8() != 0;
    s.t_accident = r.i32();
    s.hazardAgent = r.i32();
    s.T = r.u16();
    s.H = r.u16();
    s.W = r.u16();
    s.fps = r.u16();
    if (s.T <= 0 || s.H <= 0 || s.W <= 0 || s.fps <= 0)
      throw ParseError("corrupt sequence header at byte offset " +
                       std::to_string(recordStart));
    const uint16_t nTok = r.u16();
    s.tokens.resize(nTok);
    for (uint16_t k = 0; k < nTok; ++k) s.tokens[k] = r.u16();
    const size_t gridN = static_cast<size_t>(s.T) * s.H * s.W * 3;
    const size_t mapN = static_cast<size_t>(s.T) * s.H * s.W;
    s.grids.resize(gridN);
    for (size_t k = 0; k < gridN; ++k) s.grids[k] = r.f64();
    s.maps.resize(mapN);
    for (size_t k = 0; k < mapN; ++k) s.maps[k] = r.f64();
    const uint16_t nAgents = r.u16();
    s.agents.resize(nAgents);
    for (Agent& a : s.agents) {
      const uint8_t cls = r.u8();
      if (cls > 4)
        throw ParseError("corrupt agent class at byte offset " +
                         std::to_string(r.offset - 1));
      a.cls = static_cast<AgentClass>(cls);
      a.width = r.f64();
      a.length = r.f64();
      a.x.resize(static_cast<size_t>(s.T));
      a.z.resize(static_cast<size_t>(s.T));
      a.vx.resize(static_cast<size_t>(s.T));
      a.vz.resize(static_cast<size_t>(s.T));
      for (int t = 0; t < s.T; ++t) {
        const size_t k = static_cast<size_t>(t);
        a.x[k] = r.f64();
        a.z[k] = r.f64();
        a.vx[k] = r.f64();
        a.vz[k] = r.f64();
      }
    }
    if (r.offset - recordStart - 4 != recordLen)
      throw ParseError("record length mismatch at byte offset " +
                       std::to_string(recordStart));
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace camera
