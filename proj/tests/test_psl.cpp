#include "announcer/psl.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

using namespace announcer;

namespace {

constexpr double kW = 1920.0;
constexpr double kH = 1080.0;

double signed_angle(const Eigen::Vector2d& from, const Eigen::Vector2d& to) {
  return std::atan2(from.x() * to.y() - from.y() * to.x(), from.dot(to));
}

double wrap_pi(double a) { return std::remainder(a, 2.0 * std::numbers::pi); }

}  // namespace

TEST_SUITE("psl") {

TEST_CASE("parse accepts the concrete syntax") {
  const auto s = parse("Eye, LS, Right on npc_3 [Left]");
  CHECK(s == ShotSpec{Angle::Eye, Size::LS, Profile::Right, Screen::Left, "npc_3"});

  const auto t = parse("low, mcu, 3/4 back left on npc_0");
  CHECK(t == ShotSpec{Angle::Low, Size::MCU, Profile::ThreeQuarterBackLeft, Screen::Center, "npc_0"});

  CHECK(parse("HIGH,els,3/4right on npc_12[right]") ==
        ShotSpec{Angle::High, Size::ELS, Profile::ThreeQuarterRight, Screen::Right, "npc_12"});
  CHECK(parse("  Eye , CU , Back   on  hero  ").profile == Profile::Back);
}

TEST_CASE("parse errors carry position and expected tokens") {
  try {
    parse("Eye, XXL, Right on npc_3");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.token() == "XXL");
    CHECK(e.position() == 5);
    CHECK(std::find(e.expected().begin(), e.expected().end(), "LS") != e.expected().end());
  }
  try {
    parse("Eye, LS, Right npc_3");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.token() == "npc_3");
    CHECK(e.expected() == std::vector<std::string>{"on"});
  }
  CHECK_THROWS_AS(parse(""), ParseError);
  CHECK_THROWS_AS(parse("Eye LS Right on a"), ParseError);
  CHECK_THROWS_AS(parse("Eye, LS, Right on a [Middle]"), ParseError);
  CHECK_THROWS_AS(parse("Eye, LS, Right on a [Left"), ParseError);
  CHECK_THROWS_AS(parse("Eye, LS, Right on a [Left] extra"), ParseError);
  CHECK_THROWS_AS(parse("Eye, LS, Sideways on a"), ParseError);
}

TEST_CASE("format is canonical and round-trips every enum combination") {
  CHECK(format({Angle::Eye, Size::LS, Profile::Right, Screen::Left, "npc_3"}) == "Eye, LS, Right on npc_3 [Left]");
  int count = 0;
  for (auto a : kAngles)
    for (auto s : kSizes)
      for (auto p : kProfiles)
        for (auto sc : kScreens) {
          const ShotSpec spec{a, s, p, sc, "npc_7"};
          CHECK(parse(format(spec)) == spec);
          ++count;
        }
  CHECK(count == 504);
  const ShotSpec back{Angle::Low, Size::ELS, Profile::Back, Screen::Center, "npc_1"};
  CHECK(parse(format(back)) == back);
}

TEST_CASE("enumeration") {
  const auto specs = enumerate_specs();
  CHECK(specs.size() == 288);
  std::set<std::string> keys;
  for (const auto& s : specs) keys.insert(composition_key(s));
  CHECK(keys.size() == 288);
  CHECK(keys.contains("Eye, LS, Right [Left]"));
  for (const auto& s : specs) CHECK(s.size >= Size::MCU);
}

TEST_CASE("subject names") {
  CHECK(subject_name(4) == "npc_4");
  CHECK(subject_id("npc_12") == 12);
  CHECK_FALSE(subject_id("npc_"));
  CHECK_FALSE(subject_id("hero"));
  CHECK_FALSE(subject_id("npc_3x"));
}

TEST_CASE("solve on the symmetric axis") {
  SolveMapsd maps;
  const auto anchor = make_anchor<double>({0.0, 0.0}, 0.0, 1.7);
  const ShotSpec front{Angle::Eye, Size::LS, Profile::Front, Screen::Center, "s"};
  const auto pose = solve(front, anchor, maps);
  CHECK(pose.position.isApprox(Eigen::Vector3d(4.5, 0.0, anchor.face_point.z())));
  CHECK(pose.focus == anchor.face_point);

  ShotSpec back = front;
  back.profile = Profile::Back;
  CHECK(solve(back, anchor, maps).position.isApprox(Eigen::Vector3d(-4.5, 0.0, anchor.face_point.z())));

  ShotSpec right = front;
  right.profile = Profile::Right;
  // Facing +x, the subject's right hand is -y.
  CHECK(solve(right, anchor, maps).position.y() == doctest::Approx(-4.5));

  SubjectAnchord bad = anchor;
  bad.facing.setZero();
  CHECK_THROWS_AS(solve(front, bad, maps), GeometryError);
}

TEST_CASE("solved poses satisfy the framing invariants") {
  SolveMapsd maps;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> pos(-50.0, 50.0), yaw(0.0, 2.0 * std::numbers::pi), hgt(1.2, 2.2);
  const auto specs = enumerate_specs();
  for (int trial = 0; trial < 10; ++trial) {
    const auto anchor = make_anchor<double>({pos(rng), pos(rng)}, yaw(rng), hgt(rng));
    for (const auto& s : specs) {
      const auto pose = solve(s, anchor, maps);
      const Eigen::Vector2d off = (pose.position - anchor.base_point).head<2>();
      CHECK(std::abs(off.norm() - maps.distance(s.size)) <= 1e-9 * maps.distance(s.size));
      CHECK(std::abs(pose.position.z() - anchor.face_point.z() - maps.height(s.angle)) <= 1e-12);
      CHECK(std::abs(wrap_pi(signed_angle(anchor.facing, off) - profile_angle(s.profile))) <= 1e-6);
      const auto px = project(pose, anchor.face_point, kW, kH);
      REQUIRE(px.visible);
      const double expected = s.screen == Screen::Left ? kW / 3 : s.screen == Screen::Right ? 2 * kW / 3 : kW / 2;
      CHECK(std::abs(px.pixel.x() - expected) <= 0.5);
    }
  }
}

TEST_CASE("solve is equivariant under yaw") {
  SolveMapsd maps;
  const auto anchor = make_anchor<double>({3.0, -2.0}, 0.4, 1.7);
  for (double theta : {0.3, 1.9, -2.5}) {
    const Eigen::Matrix3d r = Eigen::AngleAxisd(theta, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    SubjectAnchord rotated = anchor;
    rotated.base_point = r * anchor.base_point;
    rotated.face_point = r * anchor.face_point;
    rotated.facing = (r * Eigen::Vector3d(anchor.facing.x(), anchor.facing.y(), 0.0)).head<2>();
    for (const auto& s : enumerate_specs()) {
      const auto a = solve(s, anchor, maps);
      const auto b = solve(s, rotated, maps);
      CHECK((r * a.position - b.position).norm() <= 1e-9);
      CHECK((r * a.focus - b.focus).norm() <= 1e-9);
    }
  }
}

TEST_CASE("screen offset oracle") {
  // Level camera: closed form d tan(fov_h / 2) / 3.
  const double fov_h = SolveMapsd{}.horizontal_fov();
  CHECK(screen_offset(4.5, 0.0, fov_h) == doctest::Approx(4.5 * std::tan(fov_h / 2) / 3).epsilon(1e-12));
  // Pitched camera: bisection on the projected position is an independent check.
  for (double h : {-1.2, 0.6, 3.0}) {
    const double a = 2.5;
    auto x_of = [&](double s) {
      const double l = std::sqrt(a * a + s * s + h * h);
      return a * s * l / (std::sqrt(a * a + s * s) * (a * a + h * h) * std::tan(fov_h / 2));
    };
    double lo = 0.0, hi = 10.0;
    for (int k = 0; k < 200; ++k) {
      const double mid = 0.5 * (lo + hi);
      (x_of(mid) < 1.0 / 3.0 ? lo : hi) = mid;
    }
    CHECK(screen_offset(a, h, fov_h) == doctest::Approx(lo).epsilon(1e-9));
  }
}

TEST_CASE("projection") {
  CameraPosed pose;
  pose.position = Eigen::Vector3d(0.0, 0.0, 1.0);
  pose.focus = Eigen::Vector3d(10.0, 0.0, 1.0);
  const auto centre = project(pose, pose.focus, kW, kH);
  CHECK(centre.visible);
  CHECK(centre.pixel.isApprox(Eigen::Vector2d(kW / 2, kH / 2)));

  CHECK_FALSE(project(pose, Eigen::Vector3d(-5.0, 0.0, 1.0), kW, kH).visible);

  const double tan_h = std::tan(pose.fov / 2) * kW / kH;
  const auto edge = project(pose, Eigen::Vector3d(10.0, -10.0 * tan_h, 1.0), kW, kH);
  CHECK(std::abs(edge.pixel.x() - kW) <= 1.0);
  const auto left_edge = project(pose, Eigen::Vector3d(10.0, 10.0 * tan_h, 1.0), kW, kH);
  CHECK(std::abs(left_edge.pixel.x()) <= 1.0);
  const auto top = project(pose, Eigen::Vector3d(10.0, 0.0, 1.0 + 10.0 * std::tan(pose.fov / 2)), kW, kH);
  CHECK(std::abs(top.pixel.y()) <= 1.0);

  // Looking straight down still yields a usable basis.
  CameraPosed down;
  down.position = Eigen::Vector3d(0.0, 0.0, 20.0);
  down.focus = Eigen::Vector3d(0.0, 0.0, 0.0);
  CHECK(project(down, Eigen::Vector3d(0.0, 0.0, 0.0), kW, kH).visible);
}

TEST_CASE("solve map validation") {
  SolveMapsd maps;
  CHECK_NOTHROW(validate(maps));
  maps.size_distance[3] = 0.1;
  CHECK_THROWS_AS(validate(maps), ConfigError);
  maps = SolveMapsd{};
  maps.fov = 4.0;
  CHECK_THROWS_AS(validate(maps), ConfigError);
}

TEST_CASE("mirroring swaps the lateral families") {
  CHECK(mirrored(Profile::ThreeQuarterRight) == Profile::ThreeQuarterLeft);
  CHECK(mirrored(Profile::Back) == Profile::Back);
  CHECK(mirrored(Screen::Left) == Screen::Right);
  for (auto p : kProfiles) CHECK(mirrored(mirrored(p)) == p);
  for (auto p : kProfiles) CHECK(std::abs(wrap_pi(profile_angle(mirrored(p)) + profile_angle(p))) <= 1e-12);
}

}
