#include "camera/alerts.hpp"

#include <cmath>
#include <cstdio>

namespace camera {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

const char* sectorName(Sector s) {
  switch (s) {
    case Sector::Ahead: return "ahead";
    case Sector::FrontRight: return "front-right";
    case Sector::Right: return "right";
    case Sector::RightBlindSpot: return "right blind spot";
    case Sector::Behind: return "behind";
    case Sector::LeftBlindSpot: return "left blind spot";
    case Sector::Left: return "left";
    case Sector::FrontLeft: return "front-left";
  }
  return "?";
}

Sector sectorOf(double bearing_deg) {
  double b = std::fmod(bearing_deg, 360.0);
  if (b > 180.0) b -= 360.0;
  if (b <= -180.0) b += 360.0;
  if (b >= -15.0 && b <= 15.0) return Sector::Ahead;
  if (b > 15.0 && b <= 75.0) return Sector::FrontRight;
  if (b > 75.0 && b <= 105.0) return Sector::Right;
  if (b > 105.0 && b <= 150.0) return Sector::RightBlindSpot;
  if (b > 150.0 || b <= -150.0) return Sector::Behind;
  if (b > -150.0 && b <= -105.0) return Sector::LeftBlindSpot;
  if (b > -105.0 && b <= -75.0) return Sector::Left;
  return Sector::FrontLeft;
}

SpatialReference locate(double x, double z) {
  if (!std::isfinite(x) || !std::isfinite(z))
    throw InputError("locate: non-finite position");
  if (x == 0.0 && z == 0.0) throw InputError("locate: zero vector");
  SpatialReference sp;
  sp.distance_m = std::round(std::hypot(x, z) * 10.0) / 10.0;
  double bearing = std::atan2(x, z) * 180.0 / kPi;
  if (bearing <= -180.0) bearing += 360.0;
  sp.bearing_deg = bearing;
  sp.sector = sectorOf(bearing);
  return sp;
}

const char* compassWord(double bearing_deg, double heading_deg) {
  static const char* kWinds[8] = {"north", "northeast", "east", "southeast",
                                  "south", "southwest", "west", "northwest"};
  double abs = std::fmod(heading_deg + bearing_deg, 360.0);
  if (abs < 0.0) abs += 360.0;
  const int idx = static_cast<int>(std::floor(std::fmod(abs + 22.5, 360.0) / 45.0));
  return kWinds[idx];
}

std::optional<std::string> renderAlert(AgentClass cls,
                                       const SpatialReference& sp, double p,
                                       double tau, AlertMode mode,
                                       double heading_deg, bool describeAll) {
  const bool triggered = p > tau;
  if (!triggered && !describeAll) return std::nullopt;
  char buf[160];
  if (mode == AlertMode::EgoRelative) {
    std::snprintf(buf, sizeof buf, "%s %.1fm in %s", agentClassName(cls),
                  sp.distance_m, sectorName(sp.sector));
  } else {
    std::snprintf(buf, sizeof buf, "%s %.1fm %s", agentClassName(cls),
                  sp.distance_m, compassWord(sp.bearing_deg, heading_deg));
  }
  std::string text = buf;
  if (triggered) {
    std::snprintf(buf, sizeof buf, " — risk %.2f above threshold %.2f", p, tau);
    text += buf;
  }
  return text;
}

int linkRiskPeak(const Tensor& ms, const ScenarioSequence& seq, int frame) {
  if (seq.agents.empty()) throw InputError("linkRiskPeak: no agents");
  const int h = ms.dim(0), w = ms.dim(1);
  size_t arg = 0;
  for (size_t i = 1; i < ms.size(); ++i)
    if (ms[i] > ms[arg]) arg = i;
  const int pr = static_cast<int>(arg) / w, pc = static_cast<int>(arg) % w;

  const double cellX = 40.0 / w, cellZ = 60.0 / h;
  int bestId = 0;
  double bestD = 1e300;
  for (size_t id = 0; id < seq.agents.size(); ++id) {
    const Agent& a = seq.agents[id];
    const size_t t = static_cast<size_t>(frame);
    const int c = std::clamp(
        static_cast<int>(std::floor((a.x[t] + 20.0) / cellX)), 0, w - 1);
    const int r = std::clamp(
        static_cast<int>(std::floor((60.0 - a.z[t]) / cellZ)), 0, h - 1);
    const double d = std::hypot(r - pr, c - pc);
    if (d < bestD) {
      bestD = d;
      bestId = static_cast<int>(id);
    }
  }
  return bestId;
}

}  // namespace camera
