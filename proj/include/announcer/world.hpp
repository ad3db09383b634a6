#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <variant>
#include <vector>

namespace announcer {

struct Rect {
  Eigen::Vector2d min{0.0, 0.0};
  Eigen::Vector2d max{0.0, 0.0};

  bool contains(const Eigen::Vector2d& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  Eigen::Vector2d center() const { return 0.5 * (min + max); }
  Eigen::Vector2d size() const { return max - min; }
  bool operator==(const Rect&) const = default;
};

/// Axis-aligned obstacle: `position` is the minimum corner, `extent` the size
/// along x, y and z. Boxes stand on the ground plane unless position.z > 0.
struct Box {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Vector3d extent = Eigen::Vector3d::Zero();

  Eigen::Vector3d lower() const { return position; }
  Eigen::Vector3d upper() const { return position + extent; }
  double top() const { return position.z() + extent.z(); }
  /// Footprint test with the box grown by `margin` on every horizontal side.
  bool footprint_contains(const Eigen::Vector2d& p, double margin = 0.0) const {
    return p.x() > position.x() - margin && p.x() < position.x() + extent.x() + margin &&
           p.y() > position.y() - margin && p.y() < position.y() + extent.y() + margin;
  }
  bool operator==(const Box&) const = default;
};

struct PointOfInterest {
  std::string name;
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  bool operator==(const PointOfInterest&) const = default;
};

/// Movement and activity rates of the simulated avatars.
struct MotionRates {
  double walk_speed = 1.4;        // m/s
  double chase_speed = 3.0;       // m/s
  double words_per_second = 2.0;  // per conversation participant
  double converse_min = 5.0;      // s
  double converse_max = 20.0;     // s
  double wait_max = 10.0;         // s, wait is uniform in [0, wait_max]
  double chase_radius = 40.0;     // m
  double converse_distance = 1.5; // m
  double chase_timeout = 30.0;    // s
  double voxel_rate = 0.02;       // voxels placed per second (Poisson)
  double tx_rate = 0.01;          // transactions per second (Poisson)
  double tx_amount_max = 5.0;     // token units per transaction, uniform in [1, max]
  double poi_bias = 0.5;          // probability a walk targets a point of interest
  double poi_jitter = 5.0;        // m, radius around the POI
  bool operator==(const MotionRates&) const = default;
};

struct WorldConfig {
  Rect bounds{{0.0, 0.0}, {200.0, 150.0}};
  std::vector<PointOfInterest> pois;
  std::vector<Box> obstacles;
  int avatar_count = 16;
  double tick_rate = 20.0;
  std::uint64_t seed = 42;
  double avatar_height = 1.7;
  MotionRates rates;
  bool operator==(const WorldConfig&) const = default;
};

/// Throws ConfigError naming the first offending field.
void validate(const WorldConfig& config);

/// Campus layout used when no scenario file is given.
WorldConfig default_world_config();

namespace phase {
struct Walk {
  Eigen::Vector2d dest = Eigen::Vector2d::Zero();
  double stalled = 0.0;
  bool operator==(const Walk&) const = default;
};
struct Chase {
  int target = -1;
  double elapsed = 0.0;
  bool operator==(const Chase&) const = default;
};
struct Converse {
  std::vector<int> partners;  // sorted, unique, never contains self
  double remaining = 0.0;
  bool operator==(const Converse&) const = default;
};
struct Wait {
  double remaining = 0.0;
  bool operator==(const Wait&) const = default;
};
}  // namespace phase

using BehaviorPhase = std::variant<phase::Walk, phase::Chase, phase::Converse, phase::Wait>;

enum class PhaseKind { Walk = 0, Chase = 1, Converse = 2, Wait = 3 };
inline PhaseKind kind_of(const BehaviorPhase& p) { return static_cast<PhaseKind>(p.index()); }
const char* to_string(PhaseKind kind);

/// Per-window action channels of one avatar.
struct ActionSample {
  double move_distance = 0.0;
  double move_speed = 0.0;
  double spoken_words = 0.0;
  double voxel_count = 0.0;
  double tx_volume = 0.0;
  double window = 0.0;
  bool operator==(const ActionSample&) const = default;
};

struct AvatarState {
  int id = 0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  double facing = 0.0;  // yaw in [0, 2pi)
  double height = 1.7;
  BehaviorPhase behavior;
  ActionSample metrics;
  bool operator==(const AvatarState&) const = default;

  Eigen::Vector2d ground() const { return position.head<2>(); }
  Eigen::Vector2d facing_dir() const { return {std::cos(facing), std::sin(facing)}; }
};

struct WorldState {
  std::shared_ptr<const WorldConfig> config;
  std::int64_t tick = 0;
  double time = 0.0;
  std::vector<AvatarState> avatars;
  std::vector<std::mt19937_64> streams;  // one per avatar

  bool operator==(const WorldState& other) const {
    return tick == other.tick && time == other.time && avatars == other.avatars &&
           streams == other.streams && *config == *other.config;
  }
};

WorldState spawn_world(const WorldConfig& config);

/// Advances every avatar by dt seconds, in id order.
void advance(WorldState& world, double dt);

inline WorldState step(WorldState world, double dt) {
  advance(world, dt);
  return world;
}

/// Clears every avatar's ActionSample; called at the start of each fetch window.
void reset_windows(WorldState& world);

struct DensityMap {
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();
  double cell_size = 1.0;
  int nx = 0;
  int ny = 0;
  std::vector<int> counts;  // row-major, index = iy * nx + ix

  int total() const;
  Eigen::Vector2d cell_center(int index) const;
  int cell_of(const Eigen::Vector2d& p) const;
};

DensityMap region_density(const WorldState& world, double cell_size);

/// Stream seed for avatar `index` derived from the master seed.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

double wrap_angle(double radians);

}  // namespace announcer
