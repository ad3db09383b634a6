#pragma once

#include "announcer/errors.hpp"

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace announcer {

enum class Angle { Low, Eye, High };
enum class Size { ECU, BCU, CU, MCU, MS, LS, ELS };
enum class Profile {
  Front,
  ThreeQuarterRight,
  Right,
  ThreeQuarterBackRight,
  Back,
  ThreeQuarterBackLeft,
  Left,
  ThreeQuarterLeft,
};
enum class Screen { Left, Center, Right };

inline constexpr std::array kAngles{Angle::Low, Angle::Eye, Angle::High};
inline constexpr std::array kSizes{Size::ECU, Size::BCU, Size::CU, Size::MCU, Size::MS, Size::LS, Size::ELS};
inline constexpr std::array kProfiles{Profile::Front,
                                      Profile::ThreeQuarterRight,
                                      Profile::Right,
                                      Profile::ThreeQuarterBackRight,
                                      Profile::Back,
                                      Profile::ThreeQuarterBackLeft,
                                      Profile::Left,
                                      Profile::ThreeQuarterLeft};
inline constexpr std::array kScreens{Screen::Left, Screen::Center, Screen::Right};

std::string_view to_string(Angle a);
std::string_view to_string(Size s);
std::string_view to_string(Profile p);
std::string_view to_string(Screen s);

/// Case-insensitive keyword lookups; spaces are ignored ("3/4 back left").
std::optional<Angle> angle_from_string(std::string_view text);
std::optional<Size> size_from_string(std::string_view text);
std::optional<Profile> profile_from_string(std::string_view text);
std::optional<Screen> screen_from_string(std::string_view text);

struct ShotSpec {
  Angle angle = Angle::Eye;
  Size size = Size::MS;
  Profile profile = Profile::Front;
  Screen screen = Screen::Center;
  std::string subject = "subject";

  bool operator==(const ShotSpec&) const = default;
};

/// Parses `<Angle>, <Size>, <Profile> on <Subject> [<Screen>]`. Keywords are
/// case-insensitive, "3/4" profiles may be written with or without spaces and
/// the bracketed screen defaults to Center.
ShotSpec parse(std::string_view text);

/// Canonical text, e.g. "Eye, LS, Right on npc_3 [Left]".
std::string format(const ShotSpec& spec);

/// The spec without its subject, e.g. "Eye, LS, Right [Left]".
std::string composition_key(const ShotSpec& spec);

/// Every Angle x {MCU, MS, LS, ELS} x Profile x Screen template, angle-major.
std::vector<ShotSpec> enumerate_specs();

std::string subject_name(int avatar_id);
std::optional<int> subject_id(std::string_view name);

/// Signed horizontal angle (counter-clockwise, z up) from the subject's facing
/// direction to the camera bearing. "Right" places the camera on the subject's
/// right-hand side, i.e. -90 degrees.
inline double profile_angle(Profile p) {
  constexpr double q = std::numbers::pi / 4.0;
  switch (p) {
    case Profile::Front: return 0.0;
    case Profile::ThreeQuarterRight: return -q;
    case Profile::Right: return -2.0 * q;
    case Profile::ThreeQuarterBackRight: return -3.0 * q;
    case Profile::Back: return std::numbers::pi;
    case Profile::ThreeQuarterBackLeft: return 3.0 * q;
    case Profile::Left: return 2.0 * q;
    case Profile::ThreeQuarterLeft: return q;
  }
  return 0.0;
}

/// Swaps the left and right families; Front and Back map to themselves.
Profile mirrored(Profile p);
Screen mirrored(Screen s);

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;

template <typename Scalar>
struct SubjectAnchor {
  Vec3<Scalar> base_point = Vec3<Scalar>::Zero();  // lower abdomen
  Vec3<Scalar> face_point = Vec3<Scalar>::Zero();  // midpoint of the face
  Vec2<Scalar> facing = Vec2<Scalar>::UnitX();     // unit, horizontal
};

/// Anchor for an upright avatar of height `height` standing at `ground`.
template <typename Scalar>
SubjectAnchor<Scalar> make_anchor(const Vec2<Scalar>& ground, Scalar yaw, Scalar height) {
  SubjectAnchor<Scalar> anchor;
  anchor.base_point << ground.x(), ground.y(), Scalar(0.55) * height;
  anchor.face_point << ground.x(), ground.y(), Scalar(0.93) * height;
  anchor.facing << std::cos(yaw), std::sin(yaw);
  return anchor;
}

template <typename Scalar>
struct SolveMaps {
  /// Horizontal camera distance from the base point, indexed by Size.
  std::array<Scalar, 7> size_distance{Scalar(0.35), Scalar(0.55), Scalar(0.8), Scalar(1.5),
                                      Scalar(2.5),  Scalar(4.5),  Scalar(10)};
  /// Camera height relative to the face point, indexed by Angle.
  std::array<Scalar, 3> angle_height{Scalar(-0.6), Scalar(0), Scalar(1.2)};
  Scalar fov = Scalar(50.0 * std::numbers::pi / 180.0);  // vertical, radians
  Scalar aspect = Scalar(16.0 / 9.0);

  Scalar distance(Size s) const { return size_distance[static_cast<std::size_t>(s)]; }
  Scalar height(Angle a) const { return angle_height[static_cast<std::size_t>(a)]; }
  Scalar horizontal_fov() const { return Scalar(2) * std::atan(aspect * std::tan(fov / Scalar(2))); }
};

template <typename Scalar>
struct CameraPose {
  Vec3<Scalar> position = Vec3<Scalar>::Zero();
  Vec3<Scalar> focus = Vec3<Scalar>::UnitX();
  Scalar fov = Scalar(50.0 * std::numbers::pi / 180.0);

  bool operator==(const CameraPose& o) const {
    return position == o.position && focus == o.focus && fov == o.fov;
  }
};

using CameraPosed = CameraPose<double>;
using SubjectAnchord = SubjectAnchor<double>;
using SolveMapsd = SolveMaps<double>;

/// Throws ConfigError unless distances increase strictly and fov lies in (0, pi).
void validate(const SolveMapsd& maps);

template <typename Scalar>
Vec2<Scalar> rotate(const Vec2<Scalar>& v, Scalar radians) {
  return Eigen::Rotation2D<Scalar>(radians) * v;
}

template <typename Scalar>
struct ProjectedPoint {
  Vec2<Scalar> pixel = Vec2<Scalar>::Zero();
  Scalar depth = Scalar(0);
  bool visible = false;
};

/// Camera basis (right, up, forward) for a pose looking at its focus, world z up.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> camera_basis(const CameraPose<Scalar>& pose) {
  const Vec3<Scalar> forward = (pose.focus - pose.position).normalized();
  Vec3<Scalar> right = forward.cross(Vec3<Scalar>::UnitZ());
  if (right.squaredNorm() < Scalar(1e-20)) right = Vec3<Scalar>::UnitX();
  right.normalize();
  Eigen::Matrix<Scalar, 3, 3> basis;
  basis.col(0) = right;
  basis.col(1) = right.cross(forward);
  basis.col(2) = forward;
  return basis;
}

/// Perspective projection to pixel coordinates (origin top-left, y down).
template <typename Scalar>
ProjectedPoint<Scalar> project(const CameraPose<Scalar>& pose, const Vec3<Scalar>& point, Scalar width,
                               Scalar height) {
  const auto basis = camera_basis(pose);
  const Vec3<Scalar> local = basis.transpose() * (point - pose.position);
  const Scalar tan_v = std::tan(pose.fov / Scalar(2));
  const Scalar tan_h = tan_v * width / height;
  ProjectedPoint<Scalar> out;
  out.depth = local.z();
  if (!(local.z() > Scalar(0))) return out;
  const Scalar x_ndc = local.x() / (local.z() * tan_h);
  const Scalar y_ndc = local.y() / (local.z() * tan_v);
  out.pixel << (x_ndc + Scalar(1)) * width / Scalar(2), (Scalar(1) - y_ndc) * height / Scalar(2);
  out.visible = std::abs(x_ndc) <= Scalar(1) && std::abs(y_ndc) <= Scalar(1);
  return out;
}

/// Lateral focus shift that lands the face on a vertical third line.
///
/// With horizontal camera-to-face distance a and face height above the camera
/// h, shifting the focus by s perpendicular to the horizontal view direction
/// puts the face at normalized x = a s L / (sqrt(a^2 + s^2) (a^2 + h^2) tan(fov_h/2)),
/// L = |(a, s, h)|. Setting that to 1/3 gives a quadratic in s^2. For h = 0 it
/// reduces to s = a tan(fov_h/2) / 3.
template <typename Scalar>
Scalar screen_offset(Scalar a, Scalar h, Scalar horizontal_fov) {
  const Scalar k = std::tan(horizontal_fov / Scalar(2)) * (a * a + h * h) / (Scalar(3) * a);
  const Scalar b = a * a + h * h - k * k;
  const Scalar disc = std::sqrt(b * b + Scalar(4) * k * k * a * a);
  const Scalar u = b >= Scalar(0) ? Scalar(2) * k * k * a * a / (b + disc) : (disc - b) / Scalar(2);
  return std::sqrt(u);
}

/// Solves a shot specification into a camera pose around `anchor`.
template <typename Scalar>
CameraPose<Scalar> solve(const ShotSpec& spec, const SubjectAnchor<Scalar>& anchor, const SolveMaps<Scalar>& maps) {
  const Scalar facing_norm = anchor.facing.norm();
  if (!(facing_norm > Scalar(1e-12))) throw GeometryError("solve: subject facing vector is zero");
  const Vec2<Scalar> bearing =
      rotate<Scalar>(anchor.facing / facing_norm, static_cast<Scalar>(profile_angle(spec.profile)));

  CameraPose<Scalar> pose;
  pose.fov = maps.fov;
  pose.position.template head<2>() = anchor.base_point.template head<2>() + bearing * maps.distance(spec.size);
  pose.position.z() = anchor.face_point.z() + maps.height(spec.angle);

  pose.focus = anchor.face_point;
  if (spec.screen != Screen::Center) {
    const Vec3<Scalar> to_face = anchor.face_point - pose.position;
    const Scalar a = to_face.template head<2>().norm();
    if (!(a > Scalar(0))) throw GeometryError("solve: camera is vertically aligned with the face");
    const Vec2<Scalar> view = to_face.template head<2>() / a;
    const Vec2<Scalar> camera_right(view.y(), -view.x());
    const Scalar s = screen_offset<Scalar>(a, to_face.z(), maps.horizontal_fov());
    // The face lands opposite to the side the focus moves toward.
    const Scalar sign = spec.screen == Screen::Left ? Scalar(1) : Scalar(-1);
    pose.focus.template head<2>() += sign * s * camera_right;
  }
  return pose;
}

}  // namespace announcer
