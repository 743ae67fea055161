#pragma once

#include <optional>
#include <string>

#include "camera/scenario.hpp"
#include "camera/tensor.hpp"

namespace camera {

enum class Sector {
  Ahead,
  FrontRight,
  Right,
  RightBlindSpot,
  Behind,
  LeftBlindSpot,
  Left,
  FrontLeft,
};

const char* sectorName(Sector s);

struct SpatialReference {
  double distance_m = 0.0;   // rounded to 0.1 m
  double bearing_deg = 0.0;  // (-180, 180], 0 = straight ahead, + = right
  Sector sector = Sector::Ahead;
};

struct Alert {
  int frame = -1;
  int agentId = -1;
  AgentClass cls = AgentClass::Car;
  SpatialReference spatial;
  double p = 0.0, tau = 0.0;
  std::string text;
};

// Sector bin for a bearing in degrees (normalized into (-180, 180]).
Sector sectorOf(double bearing_deg);

// Ego-relative polar reference for an agent at (x,z); throws InputError on
// the zero vector.
SpatialReference locate(double x, double z);

enum class AlertMode { EgoRelative, Compass };

// 8-wind compass word for an ego-relative bearing given the ego heading
// (degrees clockwise from north).
const char* compassWord(double bearing_deg, double heading_deg);

// "{Class} {d}m in {sector}" plus the risk clause when p > tau; compass mode
// swaps the sector for a compass word. Returns nullopt below threshold
// unless describeAll.
std::optional<std::string> renderAlert(AgentClass cls,
                                       const SpatialReference& sp, double p,
                                       double tau,
                                       AlertMode mode = AlertMode::EgoRelative,
                                       double heading_deg = 0.0,
                                       bool describeAll = false);

// Agent whose grid cell is nearest to the risk-map argmax; ties go to the
// smaller agent id. Positions are taken at the given frame.
int linkRiskPeak(const Tensor& ms, const ScenarioSequence& seq, int frame);

}  // namespace camera
