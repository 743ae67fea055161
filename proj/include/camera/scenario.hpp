#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "camera/tensor.hpp"

namespace camera {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

enum class AgentClass : uint8_t {
  Pedestrian = 0,
  Car = 1,
  Motorcycle = 2,
  Bus = 3,
  Cyclist = 4,
};

const char* agentClassName(AgentClass c);

/// Ego-frame agent trajectory: x lateral (m, right positive), z longitudinal
// (m, ahead positive), sampled at frame rate.
struct Agent {
  AgentClass cls = AgentClass::Car;
  double width = 1.8, length = 4.2;
  std::vector<double> x, z, vx, vz;

  bool operator==(const Agent&) const = default;
};

// Scene regimes for the generator: Mixed is the reference benchmark
// distribution; Benign/Hazard form the two-regime threshold stress set.
enum class Regime { Mixed = 0, Benign = 1, Hazard = 2 };

struct ScenarioConfig {
  int T = 64;
  int fps = 10;
  int H = 32;
  int W = 32;
  int tokenLen = 32;
  int vocab = 64;
  double collisionRadius = 1.0;
  double distractedFraction = 0.5;
  Regime regime = Regime::Mixed;

  void validate() const;
};

struct ScenarioSequence {
  int T = 0, fps = 0, H = 0, W = 0;
  bool label = false;        // positive = collision occurs
  int t_accident = -1;       // frame index, -1 for negatives
  bool distracted = false;
  int hazardAgent = -1;      // index into agents (focus agent)
  std::vector<int> tokens;   // fixed length, pad id 0
  std::vector<double> grids; // T*H*W*3, the rendered X_r surrogate
  std::vector<double> maps;  // T*H*W, the driver attention X_f
  std::vector<Agent> agents;

  Tensor gridAt(int t) const;  // [H,W,3]
  Tensor mapAt(int t) const;   // [H,W]

  bool operator==(const ScenarioSequence&) const = default;
};

// Fixed scenario->token vocabulary (64 entries). Token 0 is pad.
namespace tokens {
constexpr int kPad = 0;
// 1..5: agent classes, offset by class id
constexpr int kClassBase = 1;
constexpr int kCrossing = 6;
constexpr int kClosing = 7;
constexpr int kStopping = 8;
constexpr int kPassing = 9;
constexpr int kDensityLow = 10;
constexpr int kDensityMedium = 11;
constexpr int kDensityHigh = 12;
constexpr int kClear = 13;
constexpr int kRain = 14;
constexpr int kFog = 15;
constexpr int kNight = 16;
constexpr int kUrban = 17;
constexpr int kHighway = 18;
constexpr int kIntersection = 19;
constexpr int kAttentive = 20;
constexpr int kDistracted = 21;
const char* name(int id);
}  // namespace tokens

// Pure function of (seed, index, positive, config).
ScenarioSequence generateOne(uint64_t seed, uint64_t index, bool positive,
                             const ScenarioConfig& cfg,
                             std::optional<bool> forceDistracted = {});

// Pure function of (seed, count, positiveFraction, config); the first
// llround(count*positiveFraction) indices are positive.
std::vector<ScenarioSequence> generate(uint64_t seed, int count,
                                       double positiveFraction,
                                       const ScenarioConfig& cfg = {});

// Two-regime stress set: count/2 low-complexity benign negatives followed by
// count/2 high-complexity hazard positives.
std::vector<ScenarioSequence> generateStressSet(uint64_t seed, int count,
                                                const ScenarioConfig& base = {});

// Per-frame binary anticipation targets: 1 within window_s seconds before the
// accident (clamped at frame 0), else 0.
std::vector<double> labelFrames(const ScenarioSequence& seq,
                                double window_s = 3.0);

// "CAMS" container, little-endian, 64-bit floats.
void saveScenarios(const std::string& path,
                   const std::vector<ScenarioSequence>& seqs);
std::vector<ScenarioSequence> loadScenarios(const std::string& path);

}  // namespace camera
