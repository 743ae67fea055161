#include <doctest.h>

#include <cmath>
#include <string>

#include "camera/alerts.hpp"
#include "camera/scenario.hpp"

using namespace camera;

namespace {
constexpr double kPi = 3.14159265358979323846;

Sector sectorFromTable(double b) {
  // the normative bin table, restated independently
  if (b >= -15.0 && b <= 15.0) return Sector::Ahead;
  if (b > 15.0 && b <= 75.0) return Sector::FrontRight;
  if (b > 75.0 && b <= 105.0) return Sector::Right;
  if (b > 105.0 && b <= 150.0) return Sector::RightBlindSpot;
  if (b > -150.0 && b <= -105.0) return Sector::LeftBlindSpot;
  if (b > -105.0 && b <= -75.0) return Sector::Left;
  if (b > -75.0 && b < -15.0) return Sector::FrontLeft;
  return Sector::Behind;
}
}  // namespace

TEST_CASE("sector boundaries land on the documented bins") {
  CHECK(sectorOf(0.0) == Sector::Ahead);
  CHECK(sectorOf(15.0) == Sector::Ahead);
  CHECK(sectorOf(-15.0) == Sector::Ahead);
  CHECK(sectorOf(15.0001) == Sector::FrontRight);
  CHECK(sectorOf(75.0) == Sector::FrontRight);
  CHECK(sectorOf(75.0001) == Sector::Right);
  CHECK(sectorOf(105.0) == Sector::Right);
  CHECK(sectorOf(105.0001) == Sector::RightBlindSpot);
  CHECK(sectorOf(150.0) == Sector::RightBlindSpot);
  CHECK(sectorOf(150.0001) == Sector::Behind);
  CHECK(sectorOf(180.0) == Sector::Behind);
  CHECK(sectorOf(-180.0) == Sector::Behind);  // normalized to +180
  CHECK(sectorOf(-150.0) == Sector::Behind);
  CHECK(sectorOf(-149.9999) == Sector::LeftBlindSpot);
  CHECK(sectorOf(-105.0) == Sector::LeftBlindSpot);
  CHECK(sectorOf(-104.9999) == Sector::Left);
  CHECK(sectorOf(-75.0) == Sector::Left);
  CHECK(sectorOf(-74.9999) == Sector::FrontLeft);
  CHECK(sectorOf(-15.0001) == Sector::FrontLeft);
  // wrap-around normalization
  CHECK(sectorOf(270.0) == Sector::Left);
  CHECK(sectorOf(-270.0) == Sector::Right);
  CHECK(sectorOf(360.0) == Sector::Ahead);
}

TEST_CASE("sector bins partition the circle") {
  for (int i = -18000; i <= 18000; ++i) {
    const double b = i / 100.0;
    const double n = b <= -180.0 ? b + 360.0 : b;
    CHECK(sectorOf(b) == sectorFromTable(n));
  }
}

TEST_CASE("locate: polar conversion, rounding, and error cases") {
  // straight ahead
  SpatialReference sp = locate(0.0, 5.0);
  CHECK(sp.bearing_deg == 0.0);
  CHECK(sp.distance_m == 5.0);
  CHECK(sp.sector == Sector::Ahead);
  // due right: positive x
  sp = locate(3.0, 0.0);
  CHECK(sp.bearing_deg == doctest::Approx(90.0));
  CHECK(sp.sector == Sector::Right);
  // distance rounds to 0.1 m
  CHECK(locate(0.0, 1.234).distance_m == doctest::Approx(1.2));
  CHECK(locate(0.0, 1.251).distance_m == doctest::Approx(1.3));
  CHECK_THROWS_AS(locate(0.0, 0.0), InputError);
  CHECK_THROWS_AS(locate(std::nan(""), 1.0), InputError);
}

TEST_CASE("golden exemplar: left blind spot at bearing -120") {
  const double b = -120.0 * kPi / 180.0;
  const SpatialReference sp = locate(2.1 * std::sin(b), 2.1 * std::cos(b));
  CHECK(sp.bearing_deg == doctest::Approx(-120.0).epsilon(1e-9));
  CHECK(sp.distance_m == doctest::Approx(2.1));
  CHECK(sp.sector == Sector::LeftBlindSpot);
  const auto text =
      renderAlert(AgentClass::Pedestrian, sp, 0.82, 0.57);
  REQUIRE(text.has_value());
  CHECK(*text ==
        "Pedestrian 2.1m in left blind spot — risk 0.82 above threshold 0.57");
}

TEST_CASE("golden exemplar: bearing -100 is left, not left blind spot") {
  const double b = -100.0 * kPi / 180.0;
  const SpatialReference sp = locate(3.0 * std::sin(b), 3.0 * std::cos(b));
  CHECK(sp.sector == Sector::Left);
  const auto text = renderAlert(AgentClass::Car, sp, 0.7, 0.5);
  REQUIRE(text.has_value());
  CHECK(*text == "Car 3.0m in left — risk 0.70 above threshold 0.50");
}

TEST_CASE("alerts trigger only when p exceeds tau strictly") {
  const SpatialReference sp = locate(0.0, 4.0);
  CHECK_FALSE(renderAlert(AgentClass::Car, sp, 0.5, 0.5).has_value());
  CHECK_FALSE(renderAlert(AgentClass::Car, sp, 0.49, 0.5).has_value());
  CHECK(renderAlert(AgentClass::Car, sp, 0.51, 0.5).has_value());
  // describeAll yields the spatial sentence without the risk clause
  const auto quiet =
      renderAlert(AgentClass::Bus, sp, 0.2, 0.5, AlertMode::EgoRelative, 0.0,
                  true);
  REQUIRE(quiet.has_value());
  CHECK(*quiet == "Bus 4.0m in ahead");
}

TEST_CASE("compass mode covers all eight winds") {
  const char* expect[8] = {"north",     "northeast", "east", "southeast",
                           "south",     "southwest", "west", "northwest"};
  for (int i = 0; i < 8; ++i) {
    CHECK(std::string(compassWord(45.0 * i, 0.0)) == expect[i]);
    // heading rotates the frame: bearing 0 with heading 45*i points the same
    CHECK(std::string(compassWord(0.0, 45.0 * i)) == expect[i]);
  }
  // 22.5 degrees is the northeast boundary (rounds up into the next wind)
  CHECK(std::string(compassWord(22.5, 0.0)) == "northeast");
  CHECK(std::string(compassWord(22.4999, 0.0)) == "north");
  CHECK(std::string(compassWord(-22.5, 0.0)) == "north");
  CHECK(std::string(compassWord(-22.6, 0.0)) == "northwest");
  // combined rotation wraps
  CHECK(std::string(compassWord(90.0, 90.0)) == "south");
  CHECK(std::string(compassWord(-90.0, 45.0)) == "northwest");
}

TEST_CASE("compass alert golden string") {
  const SpatialReference sp = locate(2.0, 0.0);  // due right, 2.0 m
  const auto text = renderAlert(AgentClass::Cyclist, sp, 0.66, 0.4,
                                AlertMode::Compass, 90.0);
  REQUIRE(text.has_value());
  // bearing 90 + heading 90 = south
  CHECK(*text == "Cyclist 2.0m south — risk 0.66 above threshold 0.40");
}

TEST_CASE("risk peak links to the nearest agent, ties to the smaller id") {
  ScenarioSequence seq;
  seq.T = 1;
  Agent near;  // x in [-20,-10), z in (45,60] -> cell (0,0) on a 4x4 map
  near.x = {-15.0};
  near.z = {50.0};
  near.vx = {0.0};
  near.vz = {0.0};
  Agent far = near;
  far.x = {15.0};  // cell (3,3)
  far.z = {5.0};
  seq.agents = {near, far};

  Tensor ms({4, 4}, 1e-3);
  ms.at(0, 0) = 0.9;
  CHECK(linkRiskPeak(ms, seq, 0) == 0);
  ms.at(0, 0) = 1e-3;
  ms.at(3, 3) = 0.9;
  CHECK(linkRiskPeak(ms, seq, 0) == 1);

  // tie: both agents in the same cell -> smaller id wins
  seq.agents[1] = seq.agents[0];
  ms.at(3, 3) = 1e-3;
  ms.at(2, 2) = 0.9;
  CHECK(linkRiskPeak(ms, seq, 0) == 0);

  ScenarioSequence empty;
  CHECK_THROWS_AS(linkRiskPeak(ms, empty, 0), InputError);
}
