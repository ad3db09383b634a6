#pragma once

#include "announcer/composition.hpp"
#include "announcer/events.hpp"
#include "announcer/psl.hpp"
#include "announcer/world.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace announcer {

enum class ModeKind { BirdsEye, FirstPerson, ThirdPerson };
const char* to_string(ModeKind mode);

struct DirectorMode {
  ModeKind kind = ModeKind::BirdsEye;
  std::vector<int> subjects;
};

DirectorMode mode_for(const Event& event);

/// Closed dolly trace; the last point connects back to the first.
struct PatrolTrace {
  std::vector<Eigen::Vector3d> points;
  double speed = 4.0;                                        // m/s
  Eigen::Vector3d look_target = Eigen::Vector3d::Zero();     // ground point the dolly looks toward
  double look_ahead = 0.35;                                  // fraction of the way to look_target

  double perimeter() const;
  /// Point at arc length s (taken modulo the perimeter).
  Eigen::Vector3d at(double s) const;
};

/// Rectangle inset by `inset` of the world extent at `altitude`.
PatrolTrace default_trace(const Rect& bounds, double inset = 0.1, double altitude = 25.0, double speed = 4.0);

/// Throws ConfigError for fewer than three points, non-positive speed, or a
/// point not above every obstacle.
void validate(const PatrolTrace& trace, const std::vector<Box>& obstacles);

/// Dolly pose at arc length s: looks from the trace toward the world center, pitched down.
CameraPosed patrol_pose_at(const PatrolTrace& trace, double s);
inline CameraPosed patrol_pose(const PatrolTrace& trace, double time) {
  return patrol_pose_at(trace, trace.speed * time);
}

struct TracePoint {
  Eigen::Vector3d point = Eigen::Vector3d::Zero();
  double s = 0.0;  // arc length
};

/// Closest point on the closed polyline; ties resolve to the smallest arc length.
TracePoint nearest_trace_point(const PatrolTrace& trace, const Eigen::Vector3d& target);

/// Sign of the horizontal cross product (b - a) x (camera - a): +1, -1, or 0
/// when the camera lies on the line of action.
template <typename Scalar>
int line_of_action_side(const Vec3<Scalar>& camera, const Vec3<Scalar>& a, const Vec3<Scalar>& b) {
  const Vec2<Scalar> axis = (b - a).template head<2>();
  const Vec2<Scalar> rel = (camera - a).template head<2>();
  const Scalar cross = axis.x() * rel.y() - axis.y() * rel.x();
  const Scalar tol = Scalar(1e-9) * axis.norm() * rel.norm();
  if (cross > tol) return 1;
  if (cross < -tol) return -1;
  return 0;
}

/// Smoothstep 3t^2 - 2t^3 with t clamped to [0, 1].
double ease(double t);

/// Camera route between two positions.
struct CameraPath {
  enum class Kind { Segment, Arc, Lift };
  Kind kind = Kind::Segment;
  std::vector<Eigen::Vector3d> control;  // Segment: 2, Arc: 3 (Bezier), Lift: 4 (polyline)

  Eigen::Vector3d at(double u) const;
  Eigen::Vector3d start() const { return control.front(); }
  Eigen::Vector3d end() const { return control.back(); }
  double length(int samples = 200) const;
};

CameraPath straight_path(const Eigen::Vector3d& from, const Eigen::Vector3d& to);

/// True when `p` lies in some obstacle grown by `margin` on every side.
bool inside_obstacle(const Eigen::Vector3d& p, const std::vector<Box>& obstacles, double margin);

/// True when none of `samples` evenly spaced points hits an inflated obstacle.
bool path_clear(const CameraPath& path, const std::vector<Box>& obstacles, double margin, int samples = 100);

/// Straight segment when it clears every obstacle grown by `margin`; otherwise
/// a quadratic arc whose midpoint rises `clearance` above the tallest blocking
/// obstacle, falling back to a lift-over polyline. Throws PathError when an
/// endpoint is inside an inflated obstacle.
CameraPath plan_path(const Eigen::Vector3d& from, const Eigen::Vector3d& to, const std::vector<Box>& obstacles,
                     double margin = 0.5, double clearance = 2.0);

/// Eased interpolation: position along `path`, focus and fov linearly, all at ease(t).
CameraPosed blend(const CameraPosed& from, const CameraPosed& to, double t, const CameraPath& path);

struct DirectorConfig {
  double shot_duration = 5.0;
  double transition_duration = 2.0;
  int shots_per_event = 3;
  int retry_budget = 16;
  double obstacle_margin = 0.5;
  double path_clearance = 2.0;
  double viewport_width = 1920.0;
  double viewport_height = 1080.0;
  /// Global announcements hold for this many shot durations.
  double global_hold_shots = 3.0;
};

struct PlannedShot {
  ShotSpec spec;
  CameraPosed pose;
  double duration = 0.0;
  std::vector<int> subjects;          // avatars the pose follows
  Eigen::Vector2d anchor_ground = Eigen::Vector2d::Zero();  // their centroid at planning time
};

struct ShotPlan {
  Event event;
  DirectorMode mode;
  std::vector<PlannedShot> shots;
  std::vector<double> transitions;  // eased blend durations between consecutive shots
};

struct PlanContext {
  const CompositionTable* table = nullptr;
  RuleSet rules;
  const PreferenceDeltas* deltas = nullptr;
  SolveMapsd maps;
  std::vector<Box> obstacles;
};

/// Subject anchor for an avatar.
SubjectAnchord anchor_of(const AvatarState& avatar);

/// Plans the shot sequence for a local event. Multi-subject plans open on an
/// LS/ELS shot framing every subject and keep all cameras on one side of the
/// line between the first two subjects. Throws PlanningError when no valid
/// plan exists within the retry budget.
ShotPlan plan_shots(const Event& event, const WorldState& world, const PlanContext& context, std::mt19937_64& rng,
                    const DirectorConfig& config);

enum class CameraPhase { Patrol, Hold, Blend };
const char* to_string(CameraPhase phase);

struct AvatarGlyph {
  int id = 0;
  Eigen::Vector2d ground = Eigen::Vector2d::Zero();
  double yaw = 0.0;
  double height = 1.7;
};

struct ShotLogRecord {
  double t = 0.0;
  ModeKind mode = ModeKind::BirdsEye;
  CameraPhase phase = CameraPhase::Patrol;
  std::optional<std::int64_t> event_id;
  std::optional<std::string> spec;
  CameraPosed pose;
  std::vector<AvatarGlyph> avatars;  // set on the first tick of each Hold
};

struct DirectorTick {
  ShotLogRecord record;
  std::optional<ShotPlan> started;       // plan accepted this tick
  std::optional<Event> announced;        // event accepted this tick (local or global)
  std::optional<std::string> skipped;    // why an offered event was not announced
  std::optional<Event> finished;         // announcement whose last phase ended this tick
};

/// Camera state machine: patrols until an event is offered, then runs the
/// blend/hold sequence and returns to the nearest point of the trace.
class Director {
 public:
  Director(DirectorConfig config, PatrolTrace trace, PlanContext context, std::uint64_t seed);

  bool busy() const { return !segments_.empty(); }

  /// Advances one tick. `elected` is ignored while an announcement is running.
  DirectorTick tick(const WorldState& world, const std::optional<Event>& elected);

  const CameraPosed& pose() const { return pose_; }
  const DirectorConfig& config() const { return config_; }
  DirectorConfig& mutable_config() { return config_; }
  PlanContext& context() { return context_; }
  const PatrolTrace& trace() const { return trace_; }

 private:
  struct Segment {
    CameraPhase phase = CameraPhase::Hold;
    int ticks = 0;
    int shot = -1;                 // index into plan shots, -1 for none
    bool to_patrol = false;        // blend ends on the trace
    std::optional<CameraPosed> fixed_target;  // global announcements
  };

  CameraPosed shot_pose(const PlannedShot& shot, const WorldState& world) const;
  CameraPosed segment_target(const Segment& seg, const WorldState& world) const;
  void start_local(ShotPlan plan, const WorldState& world);
  void start_global(const Event& event, const WorldState& world);
  void begin_segment(const WorldState& world);

  DirectorConfig config_;
  PatrolTrace trace_;
  PlanContext context_;
  std::mt19937_64 rng_;

  double patrol_s_ = 0.0;
  CameraPosed pose_;
  ModeKind mode_ = ModeKind::BirdsEye;
  std::optional<ShotPlan> plan_;
  std::optional<Event> event_;
  std::vector<Segment> segments_;  // front is active
  int segment_tick_ = 0;
  CameraPosed segment_from_;
  CameraPath segment_path_;
  Eigen::Vector3d segment_target_start_ = Eigen::Vector3d::Zero();
  double return_s_ = 0.0;
};

}  // namespace announcer
