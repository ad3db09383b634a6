#include "announcer/director.hpp"

#include "announcer/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace announcer {

const char* to_string(ModeKind mode) {
  switch (mode) {
    case ModeKind::BirdsEye: return "BirdsEye";
    case ModeKind::FirstPerson: return "FirstPerson";
    case ModeKind::ThirdPerson: return "ThirdPerson";
  }
  return "?";
}

const char* to_string(CameraPhase phase) {
  switch (phase) {
    case CameraPhase::Patrol: return "Patrol";
    case CameraPhase::Hold: return "Hold";
    case CameraPhase::Blend: return "Blend";
  }
  return "?";
}

DirectorMode mode_for(const Event& event) {
  switch (event.kind) {
    case EventKind::LocalSingle: return {ModeKind::FirstPerson, event.subjects};
    case EventKind::LocalMulti: return {ModeKind::ThirdPerson, event.subjects};
    case EventKind::Global: return {ModeKind::BirdsEye, {}};
  }
  return {};
}

// ---------------------------------------------------------------- patrol trace

double PatrolTrace::perimeter() const {
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) total += (points[(i + 1) % points.size()] - points[i]).norm();
  return total;
}

Eigen::Vector3d PatrolTrace::at(double s) const {
  const double length = perimeter();
  if (points.empty()) return Eigen::Vector3d::Zero();
  if (!(length > 0.0)) return points.front();
  double r = std::fmod(s, length);
  if (r < 0.0) r += length;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Eigen::Vector3d& a = points[i];
    const Eigen::Vector3d& b = points[(i + 1) % points.size()];
    const double edge = (b - a).norm();
    if (r <= edge) return edge > 0.0 ? Eigen::Vector3d(a + (b - a) * (r / edge)) : a;
    r -= edge;
  }
  return points.front();
}

PatrolTrace default_trace(const Rect& bounds, double inset, double altitude, double speed) {
  const Eigen::Vector2d margin = bounds.size() * inset;
  const Eigen::Vector2d lo = bounds.min + margin;
  const Eigen::Vector2d hi = bounds.max - margin;
  PatrolTrace trace;
  trace.points = {{lo.x(), lo.y(), altitude}, {hi.x(), lo.y(), altitude}, {hi.x(), hi.y(), altitude}, {lo.x(), hi.y(), altitude}};
  trace.speed = speed;
  const Eigen::Vector2d c = bounds.center();
  trace.look_target = Eigen::Vector3d(c.x(), c.y(), 0.0);
  return trace;
}

void validate(const PatrolTrace& trace, const std::vector<Box>& obstacles) {
  if (trace.points.size() < 3) throw ConfigError("director.patrol.points", "a trace needs at least three points");
  if (!(trace.speed > 0.0)) throw ConfigError("director.patrol.speed", "must be positive");
  if (!(trace.perimeter() > 0.0)) throw ConfigError("director.patrol.points", "trace has zero length");
  double tallest = 0.0;
  for (const auto& box : obstacles) tallest = std::max(tallest, box.top());
  for (std::size_t i = 0; i < trace.points.size(); ++i) {
    if (!(trace.points[i].z() > tallest)) {
      throw ConfigError("director.patrol.points[" + std::to_string(i) + "]", "must be above every obstacle");
    }
  }
}

CameraPosed patrol_pose_at(const PatrolTrace& trace, double s) {
  CameraPosed pose;
  pose.position = trace.at(s);
  const Eigen::Vector2d ground = pose.position.head<2>();
  const Eigen::Vector2d look = ground + trace.look_ahead * (trace.look_target.head<2>() - ground);
  pose.focus = Eigen::Vector3d(look.x(), look.y(), trace.look_target.z());
  return pose;
}

TracePoint nearest_trace_point(const PatrolTrace& trace, const Eigen::Vector3d& target) {
  TracePoint best;
  double best_d = std::numeric_limits<double>::infinity();
  double s0 = 0.0;
  for (std::size_t i = 0; i < trace.points.size(); ++i) {
    const Eigen::Vector3d& a = trace.points[i];
    const Eigen::Vector3d& b = trace.points[(i + 1) % trace.points.size()];
    const Eigen::Vector3d ab = b - a;
    const double len2 = ab.squaredNorm();
    const double u = len2 > 0.0 ? std::clamp((target - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
    const Eigen::Vector3d p = a + u * ab;
    const double d = (target - p).norm();
    if (d < best_d) {
      best_d = d;
      best.point = p;
      best.s = s0 + u * std::sqrt(len2);
    }
    s0 += std::sqrt(len2);
  }
  return best;
}

// ---------------------------------------------------------------- easing and paths

double ease(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

Eigen::Vector3d CameraPath::at(double u) const {
  if (u <= 0.0) return control.front();
  if (u >= 1.0) return control.back();
  switch (kind) {
    case Kind::Segment:
      return control[0] + u * (control[1] - control[0]);
    case Kind::Arc: {
      const double v = 1.0 - u;
      return v * v * control[0] + 2.0 * u * v * control[1] + u * u * control[2];
    }
    case Kind::Lift: {
      double total = 0.0;
      for (std::size_t i = 0; i + 1 < control.size(); ++i) total += (control[i + 1] - control[i]).norm();
      double r = u * total;
      for (std::size_t i = 0; i + 1 < control.size(); ++i) {
        const double edge = (control[i + 1] - control[i]).norm();
        if (r <= edge && edge > 0.0) return control[i] + (control[i + 1] - control[i]) * (r / edge);
        r -= edge;
      }
      return control.back();
    }
  }
  return control.back();
}

double CameraPath::length(int samples) const {
  double total = 0.0;
  Eigen::Vector3d prev = at(0.0);
  for (int k = 1; k <= samples; ++k) {
    const Eigen::Vector3d p = at(static_cast<double>(k) / samples);
    total += (p - prev).norm();
    prev = p;
  }
  return total;
}

CameraPath straight_path(const Eigen::Vector3d& from, const Eigen::Vector3d& to) {
  return CameraPath{CameraPath::Kind::Segment, {from, to}};
}

bool inside_obstacle(const Eigen::Vector3d& p, const std::vector<Box>& obstacles, double margin) {
  return std::any_of(obstacles.begin(), obstacles.end(), [&](const Box& box) {
    return ((p.array() > box.lower().array() - margin) && (p.array() < box.upper().array() + margin)).all();
  });
}

bool path_clear(const CameraPath& path, const std::vector<Box>& obstacles, double margin, int samples) {
  for (int k = 0; k < samples; ++k) {
    const double u = samples > 1 ? static_cast<double>(k) / (samples - 1) : 0.0;
    if (inside_obstacle(path.at(u), obstacles, margin)) return false;
  }
  return true;
}

namespace {

// Slab test of segment [p, q] against a box grown by margin.
bool segment_hits(const Eigen::Vector3d& p, const Eigen::Vector3d& q, const Box& box, double margin) {
  const Eigen::Vector3d lo = box.lower().array() - margin;
  const Eigen::Vector3d hi = box.upper().array() + margin;
  const Eigen::Vector3d d = q - p;
  double t0 = 0.0, t1 = 1.0;
  for (int axis = 0; axis < 3; ++axis) {
    if (std::abs(d[axis]) < 1e-15) {
      if (p[axis] <= lo[axis] || p[axis] >= hi[axis]) return false;
      continue;
    }
    double ta = (lo[axis] - p[axis]) / d[axis];
    double tb = (hi[axis] - p[axis]) / d[axis];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 >= t1) return false;
  }
  return true;
}

}  // namespace

CameraPath plan_path(const Eigen::Vector3d& from, const Eigen::Vector3d& to, const std::vector<Box>& obstacles,
                     double margin, double clearance) {
  if (inside_obstacle(from, obstacles, margin)) throw PathError("plan_path: start lies inside an obstacle");
  if (inside_obstacle(to, obstacles, margin)) throw PathError("plan_path: end lies inside an obstacle");

  double tallest = -std::numeric_limits<double>::infinity();
  for (const auto& box : obstacles) {
    if (segment_hits(from, to, box, margin)) tallest = std::max(tallest, box.top());
  }
  if (!std::isfinite(tallest)) return straight_path(from, to);

  const Eigen::Vector3d mid = 0.5 * (from + to);
  Eigen::Vector3d apex = mid;
  apex.z() = std::max(mid.z(), tallest + clearance);
  for (int attempt = 0; attempt < 8; ++attempt) {
    // Bezier control point so the curve passes through the apex at u = 1/2.
    CameraPath arc{CameraPath::Kind::Arc, {from, 2.0 * apex - mid, to}};
    if (path_clear(arc, obstacles, margin, 200)) return arc;
    apex.z() += clearance;
  }

  double ceiling = std::max(from.z(), to.z());
  for (const auto& box : obstacles) ceiling = std::max(ceiling, box.top() + margin + clearance);
  CameraPath lift{CameraPath::Kind::Lift,
                  {from, {from.x(), from.y(), ceiling}, {to.x(), to.y(), ceiling}, to}};
  if (path_clear(lift, obstacles, margin, 200)) return lift;
  throw PathError("plan_path: no collision-free route found");
}

CameraPosed blend(const CameraPosed& from, const CameraPosed& to, double t, const CameraPath& path) {
  const double e = ease(t);
  CameraPosed pose;
  pose.position = path.at(e);
  pose.focus = (1.0 - e) * from.focus + e * to.focus;
  pose.fov = (1.0 - e) * from.fov + e * to.fov;
  if (t <= 0.0) return from;
  if (t >= 1.0) return to;
  return pose;
}

// ---------------------------------------------------------------- planning

SubjectAnchord anchor_of(const AvatarState& avatar) {
  return make_anchor<double>(avatar.ground(), avatar.facing, avatar.height);
}

namespace {

struct Picker {
  const PlanContext& context;
  const DirectorConfig& config;
  std::mt19937_64& rng;

  template <typename Valid>
  PlannedShot pick(SampleConstraints constraints, const SubjectAnchord& anchor, const std::string& subject,
                   Valid&& valid) {
    auto attempt = [&](ShotSpec spec) -> std::optional<PlannedShot> {
      spec.subject = subject;
      CameraPosed pose = solve(spec, anchor, context.maps);
      if (!valid(pose)) return std::nullopt;
      PlannedShot shot;
      shot.spec = std::move(spec);
      shot.pose = pose;
      shot.duration = config.shot_duration;
      return shot;
    };

    std::optional<ShotSpec> last;
    for (int draw = 0; draw < config.retry_budget; ++draw) {
      ShotSpec spec = sample_good(rng, 1, *context.table, constraints).front();
      if (auto shot = attempt(spec)) return *shot;
      last = spec;
    }
    const auto pool = good_pool(*context.table, constraints);
    if (last) {
      ShotSpec flipped = *last;
      flipped.profile = mirrored(flipped.profile);
      flipped.screen = mirrored(flipped.screen);
      const auto key = CompositionKey::of(flipped);
      const bool in_pool = std::any_of(pool.begin(), pool.end(), [&](const ShotSpec& s) { return CompositionKey::of(s) == key; });
      if (in_pool) {
        if (auto shot = attempt(flipped)) return *shot;
      }
    }
    for (const auto& spec : pool) {
      if (auto shot = attempt(spec)) return *shot;
    }
    throw PlanningError("plan_shots: no composition satisfies the shot constraints");
  }
};

}  // namespace

ShotPlan plan_shots(const Event& event, const WorldState& world, const PlanContext& context, std::mt19937_64& rng,
                    const DirectorConfig& config) {
  if (event.kind == EventKind::Global) throw PlanningError("plan_shots: global events are announced from the trace");
  if (context.table == nullptr) throw PlanningError("plan_shots: no composition table");
  if (event.subjects.empty()) throw PlanningError("plan_shots: event has no subjects");

  std::vector<const AvatarState*> subjects;
  for (int id : event.subjects) {
    if (id < 0 || static_cast<std::size_t>(id) >= world.avatars.size()) {
      throw PlanningError("plan_shots: unknown subject " + std::to_string(id));
    }
    subjects.push_back(&world.avatars[static_cast<std::size_t>(id)]);
  }

  ShotPlan plan;
  plan.event = event;
  plan.mode = mode_for(event);
  Picker picker{context, config, rng};
  SampleConstraints base;
  base.rules = context.rules;
  base.deltas = context.deltas;

  auto clear = [&](const CameraPosed& pose) {
    return pose.position.z() > 0.0 && !inside_obstacle(pose.position, context.obstacles, config.obstacle_margin);
  };
  auto exclude_chosen = [&](SampleConstraints c) {
    for (const auto& shot : plan.shots) c.exclude.push_back(CompositionKey::of(shot.spec));
    return c;
  };

  const int count = std::max(1, config.shots_per_event);
  if (subjects.size() == 1) {
    const AvatarState& who = *subjects.front();
    for (int k = 0; k < count; ++k) {
      PlannedShot shot = picker.pick(exclude_chosen(base), anchor_of(who), subject_name(who.id), clear);
      shot.subjects = {who.id};
      shot.anchor_ground = who.ground();
      plan.shots.push_back(std::move(shot));
    }
  } else {
    const AvatarState& a = *subjects[0];
    const AvatarState& b = *subjects[1];
    const Eigen::Vector3d pa = anchor_of(a).base_point;
    const Eigen::Vector3d pb = anchor_of(b).base_point;

    SubjectAnchord group;
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    for (const auto* s : subjects) {
      const auto anchor = anchor_of(*s);
      group.base_point += anchor.base_point;
      group.face_point += anchor.face_point;
      centroid += s->ground();
    }
    const double n = static_cast<double>(subjects.size());
    group.base_point /= n;
    group.face_point /= n;
    centroid /= n;
    const Eigen::Vector2d axis = (pb - pa).head<2>();
    group.facing = axis.norm() > 1e-9 ? Eigen::Vector2d(-axis.y(), axis.x()).normalized() : anchor_of(a).facing;

    std::vector<int> ids;
    for (const auto* s : subjects) ids.push_back(s->id);

    // Opening shot: wide, everyone in frame, off the line of action.
    SampleConstraints opening = base;
    opening.sizes = {Size::LS, Size::ELS};
    PlannedShot first = picker.pick(opening, group, subject_name(a.id), [&](const CameraPosed& pose) {
      if (!clear(pose) || line_of_action_side<double>(pose.position, pa, pb) == 0) return false;
      return std::all_of(subjects.begin(), subjects.end(), [&](const AvatarState* s) {
        return project<double>(pose, anchor_of(*s).face_point, config.viewport_width, config.viewport_height).visible;
      });
    });
    first.subjects = ids;
    first.anchor_ground = centroid;
    const int side = line_of_action_side<double>(first.pose.position, pa, pb);
    plan.shots.push_back(std::move(first));

    for (int k = 1; k < count; ++k) {
      const AvatarState& who = *subjects[static_cast<std::size_t>(k) % subjects.size()];
      const auto anchor = anchor_of(who);
      PlannedShot shot = picker.pick(exclude_chosen(base), anchor, subject_name(who.id), [&](const CameraPosed& pose) {
        return clear(pose) && line_of_action_side<double>(pose.position, pa, pb) == side &&
               project<double>(pose, anchor.face_point, config.viewport_width, config.viewport_height).visible;
      });
      shot.subjects = {who.id};
      shot.anchor_ground = who.ground();
      plan.shots.push_back(std::move(shot));
    }
  }
  plan.transitions.assign(plan.shots.size() - 1, config.transition_duration);
  return plan;
}

// ---------------------------------------------------------------- state machine

Director::Director(DirectorConfig config, PatrolTrace trace, PlanContext context, std::uint64_t seed)
    : config_(config), trace_(std::move(trace)), context_(std::move(context)), rng_(seed) {
  pose_ = patrol_pose_at(trace_, patrol_s_);
  pose_.fov = context_.maps.fov;
}

CameraPosed Director::shot_pose(const PlannedShot& shot, const WorldState& world) const {
  Eigen::Vector2d now = Eigen::Vector2d::Zero();
  for (int id : shot.subjects) now += world.avatars[static_cast<std::size_t>(id)].ground();
  now /= static_cast<double>(shot.subjects.size());
  const Eigen::Vector2d drift = now - shot.anchor_ground;
  CameraPosed pose = shot.pose;
  pose.position.head<2>() += drift;
  pose.focus.head<2>() += drift;
  return pose;
}

CameraPosed Director::segment_target(const Segment& seg, const WorldState& world) const {
  if (seg.fixed_target) return *seg.fixed_target;
  return shot_pose(plan_->shots[static_cast<std::size_t>(seg.shot)], world);
}

void Director::start_local(ShotPlan plan, const WorldState& world) {
  const double rate = world.config->tick_rate;
  const int hold = static_cast<int>(std::lround(config_.shot_duration * rate));
  const int blend_ticks = static_cast<int>(std::lround(config_.transition_duration * rate));
  segments_.clear();
  for (std::size_t k = 0; k < plan.shots.size(); ++k) {
    if (blend_ticks > 0) segments_.push_back({CameraPhase::Blend, blend_ticks, static_cast<int>(k), false, std::nullopt});
    segments_.push_back({CameraPhase::Hold, std::max(1, hold), static_cast<int>(k), false, std::nullopt});
  }
  if (blend_ticks > 0) segments_.push_back({CameraPhase::Blend, blend_ticks, -1, true, std::nullopt});
  mode_ = plan.mode.kind;
  event_ = plan.event;
  plan_ = std::move(plan);
  segment_tick_ = 0;
}

void Director::start_global(const Event& event, const WorldState& world) {
  const double rate = world.config->tick_rate;
  const int hold = static_cast<int>(std::lround(config_.global_hold_shots * config_.shot_duration * rate));
  const int blend_ticks = static_cast<int>(std::lround(config_.transition_duration * rate));
  const Eigen::Vector2d center = event.region ? event.region->center : world.config->bounds.center();
  const TracePoint tp = nearest_trace_point(trace_, Eigen::Vector3d(center.x(), center.y(), trace_.points.front().z()));
  CameraPosed target;
  target.position = tp.point;
  target.focus = Eigen::Vector3d(center.x(), center.y(), 0.0);
  target.fov = context_.maps.fov;

  segments_.clear();
  if (blend_ticks > 0) segments_.push_back({CameraPhase::Blend, blend_ticks, -1, false, target});
  segments_.push_back({CameraPhase::Hold, std::max(1, hold), -1, false, target});
  if (blend_ticks > 0) segments_.push_back({CameraPhase::Blend, blend_ticks, -1, true, std::nullopt});
  return_s_ = tp.s;
  mode_ = ModeKind::BirdsEye;
  event_ = event;
  plan_.reset();
  segment_tick_ = 0;
}

void Director::begin_segment(const WorldState& world) {
  Segment& seg = segments_.front();
  segment_from_ = pose_;
  if (seg.phase != CameraPhase::Blend) return;
  if (seg.to_patrol) {
    const TracePoint tp = nearest_trace_point(trace_, pose_.position);
    return_s_ = tp.s;
    CameraPosed target = patrol_pose_at(trace_, return_s_);
    target.fov = context_.maps.fov;
    seg.fixed_target = target;
  }
  const CameraPosed target = segment_target(seg, world);
  segment_target_start_ = target.position;
  try {
    segment_path_ = plan_path(segment_from_.position, target.position, context_.obstacles, config_.obstacle_margin,
                              config_.path_clearance);
  } catch (const PathError&) {
    segment_path_ = straight_path(segment_from_.position, target.position);
  }
}

DirectorTick Director::tick(const WorldState& world, const std::optional<Event>& elected) {
  DirectorTick out;
  if (elected) {
    if (busy()) {
      out.skipped = "director busy";
    } else if (elected->kind == EventKind::Global) {
      start_global(*elected, world);
      out.announced = *elected;
    } else {
      try {
        ShotPlan plan = plan_shots(*elected, world, context_, rng_, config_);
        out.started = plan;
        out.announced = *elected;
        start_local(std::move(plan), world);
      } catch (const PlanningError& e) {
        out.skipped = e.what();
      }
    }
  }

  ShotLogRecord& rec = out.record;
  rec.t = world.time;
  if (!busy()) {
    patrol_s_ += trace_.speed / world.config->tick_rate;
    pose_ = patrol_pose_at(trace_, patrol_s_);
    pose_.fov = context_.maps.fov;
    rec.mode = ModeKind::BirdsEye;
    rec.phase = CameraPhase::Patrol;
    rec.pose = pose_;
    return out;
  }

  if (segment_tick_ == 0) begin_segment(world);
  Segment& seg = segments_.front();
  ++segment_tick_;
  const CameraPosed target = segment_target(seg, world);
  if (seg.phase == CameraPhase::Blend) {
    const double u = static_cast<double>(segment_tick_) / seg.ticks;
    CameraPosed to = target;
    pose_ = blend(segment_from_, to, u, segment_path_);
    if (u < 1.0) pose_.position += ease(u) * (target.position - segment_target_start_);
  } else {
    pose_ = target;
  }

  rec.mode = mode_;
  rec.phase = seg.phase;
  rec.pose = pose_;
  if (event_) rec.event_id = event_->id;
  if (plan_ && seg.shot >= 0) rec.spec = format(plan_->shots[static_cast<std::size_t>(seg.shot)].spec);
  if (seg.phase == CameraPhase::Hold && segment_tick_ == 1) {
    for (const auto& a : world.avatars) rec.avatars.push_back({a.id, a.ground(), a.facing, a.height});
  }

  if (segment_tick_ >= seg.ticks) {
    const bool returned = seg.to_patrol;
    segments_.erase(segments_.begin());
    segment_tick_ = 0;
    if (segments_.empty()) {
      // A cut back (zero transition) resumes the dolly where it is closest.
      patrol_s_ = returned ? return_s_ : nearest_trace_point(trace_, pose_.position).s;
      out.finished = event_;
      plan_.reset();
      event_.reset();
      mode_ = ModeKind::BirdsEye;
    }
  }
  return out;
}

}  // namespace announcer
