#include "announcer/world.hpp"

#include "announcer/errors.hpp"

#include <algorithm>
#include <numbers>
#include <set>

namespace announcer {
namespace {

constexpr double kAvatarRadius = 0.3;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

bool blocked(const WorldConfig& config, const Eigen::Vector2d& p) {
  return std::any_of(config.obstacles.begin(), config.obstacles.end(),
                     [&](const Box& b) { return b.footprint_contains(p, kAvatarRadius); });
}

Eigen::Vector2d clamp_to(const Rect& r, const Eigen::Vector2d& p) {
  return p.cwiseMax(r.min).cwiseMin(r.max);
}

Eigen::Vector2d free_point(const WorldConfig& config, std::mt19937_64& rng,
                           const Eigen::Vector2d& fallback) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    Eigen::Vector2d p(uniform(rng, config.bounds.min.x(), config.bounds.max.x()),
                      uniform(rng, config.bounds.min.y(), config.bounds.max.y()));
    if (!blocked(config, p)) return p;
  }
  return fallback;
}

Eigen::Vector2d pick_destination(const WorldConfig& config, std::mt19937_64& rng,
                                 const Eigen::Vector2d& current) {
  const auto& rates = config.rates;
  if (!config.pois.empty() && uniform(rng, 0.0, 1.0) < rates.poi_bias) {
    const auto index = std::uniform_int_distribution<std::size_t>(0, config.pois.size() - 1)(rng);
    const Eigen::Vector2d poi = config.pois[index].position;
    for (int attempt = 0; attempt < 16; ++attempt) {
      const double r = rates.poi_jitter * std::sqrt(uniform(rng, 0.0, 1.0));
      const double a = uniform(rng, 0.0, kTwoPi);
      Eigen::Vector2d p = clamp_to(config.bounds, poi + r * Eigen::Vector2d(std::cos(a), std::sin(a)));
      if (!blocked(config, p)) return p;
    }
  }
  return free_point(config, rng, current);
}

// Moves toward `target` by at most `distance`, sliding along obstacle faces.
// Returns the distance actually travelled.
double move_toward(const WorldConfig& config, AvatarState& avatar, const Eigen::Vector2d& target,
                   double distance) {
  const Eigen::Vector2d from = avatar.ground();
  const Eigen::Vector2d delta = target - from;
  const double length = delta.norm();
  if (length <= 0.0 || distance <= 0.0) return 0.0;
  const Eigen::Vector2d wanted = length <= distance ? Eigen::Vector2d(target) : Eigen::Vector2d(from + delta * (distance / length));

  Eigen::Vector2d next = clamp_to(config.bounds, wanted);
  if (blocked(config, next)) {
    const Eigen::Vector2d slide_x = clamp_to(config.bounds, {wanted.x(), from.y()});
    const Eigen::Vector2d slide_y = clamp_to(config.bounds, {from.x(), wanted.y()});
    if (!blocked(config, slide_x)) {
      next = slide_x;
    } else if (!blocked(config, slide_y)) {
      next = slide_y;
    } else {
      next = from;
    }
  }
  const Eigen::Vector2d moved = next - from;
  const double travelled = moved.norm();
  if (travelled > 0.0) {
    avatar.position.head<2>() = next;
    avatar.facing = wrap_angle(std::atan2(moved.y(), moved.x()));
  }
  return travelled;
}

phase::Wait start_wait(const WorldConfig& config, std::mt19937_64& rng) {
  return phase::Wait{uniform(rng, 0.0, config.rates.wait_max)};
}

void add_partner(std::vector<int>& partners, int id) {
  auto it = std::lower_bound(partners.begin(), partners.end(), id);
  if (it == partners.end() || *it != id) partners.insert(it, id);
}

// Chaser `self` reached `target`: both enter (or share) a conversation.
void begin_conversation(WorldState& world, std::size_t self, std::size_t target,
                        std::mt19937_64& rng) {
  const auto& rates = world.config->rates;
  auto& chaser = world.avatars[self];
  auto& other = world.avatars[target];
  if (auto* ongoing = std::get_if<phase::Converse>(&other.behavior)) {
    phase::Converse joined{ongoing->partners, ongoing->remaining};
    add_partner(joined.partners, other.id);
    for (int member : joined.partners) {
      if (auto* c = std::get_if<phase::Converse>(&world.avatars[member].behavior)) {
        add_partner(c->partners, chaser.id);
      }
    }
    if (joined.remaining <= 0.0) joined.remaining = uniform(rng, rates.converse_min, rates.converse_max);
    chaser.behavior = std::move(joined);
    return;
  }
  const double duration = uniform(rng, rates.converse_min, rates.converse_max);
  chaser.behavior = phase::Converse{{other.id}, duration};
  other.behavior = phase::Converse{{chaser.id}, duration};
}

void face_toward(AvatarState& avatar, const Eigen::Vector2d& point) {
  const Eigen::Vector2d d = point - avatar.ground();
  if (d.squaredNorm() > 1e-12) avatar.facing = wrap_angle(std::atan2(d.y(), d.x()));
}

void accrue_channels(const WorldConfig& config, AvatarState& avatar, std::mt19937_64& rng, double dt) {
  const auto& rates = config.rates;
  if (rates.voxel_rate > 0.0) {
    avatar.metrics.voxel_count +=
        static_cast<double>(std::poisson_distribution<int>(rates.voxel_rate * dt)(rng));
  }
  if (rates.tx_rate > 0.0) {
    const int transactions = std::poisson_distribution<int>(rates.tx_rate * dt)(rng);
    for (int k = 0; k < transactions; ++k) avatar.metrics.tx_volume += uniform(rng, 1.0, rates.tx_amount_max);
  }
}

void step_avatar(WorldState& world, std::size_t index, double dt) {
  const WorldConfig& config = *world.config;
  const auto& rates = config.rates;
  auto& rng = world.streams[index];
  AvatarState& avatar = world.avatars[index];
  double travelled = 0.0;

  if (auto* wait = std::get_if<phase::Wait>(&avatar.behavior)) {
    wait->remaining = std::max(0.0, wait->remaining - dt);
    if (wait->remaining <= 0.0) avatar.behavior = phase::Walk{pick_destination(config, rng, avatar.ground())};
  } else if (auto* walk = std::get_if<phase::Walk>(&avatar.behavior)) {
    const double budget = rates.walk_speed * dt;
    const Eigen::Vector2d dest = walk->dest;
    travelled = move_toward(config, avatar, dest, budget);
    walk->stalled = travelled < 0.1 * budget ? walk->stalled + dt : 0.0;
    if ((avatar.ground() - dest).norm() <= 1e-9) {
      std::vector<int> nearby;
      for (const auto& other : world.avatars) {
        if (other.id != avatar.id && (other.ground() - avatar.ground()).norm() <= rates.chase_radius) {
          nearby.push_back(other.id);
        }
      }
      if (!nearby.empty()) {
        const auto pick = std::uniform_int_distribution<std::size_t>(0, nearby.size() - 1)(rng);
        avatar.behavior = phase::Chase{nearby[pick], 0.0};
      } else {
        avatar.behavior = start_wait(config, rng);
      }
    } else if (walk->stalled >= 1.0) {
      avatar.behavior = start_wait(config, rng);
    }
  } else if (auto* chase = std::get_if<phase::Chase>(&avatar.behavior)) {
    const std::size_t target = static_cast<std::size_t>(chase->target);
    chase->elapsed += dt;
    const Eigen::Vector2d goal = world.avatars[target].ground();
    if ((goal - avatar.ground()).norm() > rates.converse_distance) {
      travelled = move_toward(config, avatar, goal, rates.chase_speed * dt);
    }
    auto* still_chasing = std::get_if<phase::Chase>(&avatar.behavior);
    if ((world.avatars[target].ground() - avatar.ground()).norm() <= rates.converse_distance) {
      begin_conversation(world, index, target, rng);
    } else if (still_chasing->elapsed >= rates.chase_timeout) {
      avatar.behavior = start_wait(config, rng);
    }
  } else if (auto* talk = std::get_if<phase::Converse>(&avatar.behavior)) {
    talk->remaining = std::max(0.0, talk->remaining - dt);
    avatar.metrics.spoken_words += rates.words_per_second * dt;
    Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
    for (int p : talk->partners) centroid += world.avatars[static_cast<std::size_t>(p)].ground();
    face_toward(avatar, centroid / static_cast<double>(talk->partners.size()));
    if (talk->remaining <= 0.0) avatar.behavior = start_wait(config, rng);
  }

  accrue_channels(config, avatar, rng, dt);
  avatar.metrics.move_distance += travelled;
  avatar.metrics.window += dt;
  avatar.metrics.move_speed = avatar.metrics.move_distance / avatar.metrics.window;
}

}  // namespace

const char* to_string(PhaseKind kind) {
  switch (kind) {
    case PhaseKind::Walk: return "walk";
    case PhaseKind::Chase: return "chase";
    case PhaseKind::Converse: return "converse";
    case PhaseKind::Wait: return "wait";
  }
  return "unknown";
}

double wrap_angle(double radians) {
  double a = std::fmod(radians, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  if (a >= kTwoPi) a = 0.0;
  return a;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  // splitmix64 finalizer over (master, index)
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void validate(const WorldConfig& config) {
  if (!(config.bounds.max.array() > config.bounds.min.array()).all()) {
    throw ConfigError("bounds", "max must exceed min on both axes");
  }
  if (config.avatar_count < 1) throw ConfigError("avatar_count", "must be at least 1");
  if (!(config.tick_rate > 0.0)) throw ConfigError("tick_rate", "must be positive");
  if (!(config.avatar_height > 0.0)) throw ConfigError("avatar_height", "must be positive");
  std::set<std::string> names;
  for (std::size_t i = 0; i < config.pois.size(); ++i) {
    const auto& poi = config.pois[i];
    const std::string field = "pois[" + std::to_string(i) + "]";
    if (!config.bounds.contains(poi.position)) throw ConfigError(field, "point of interest '" + poi.name + "' lies outside bounds");
    if (!names.insert(poi.name).second) throw ConfigError(field + ".name", "duplicate name '" + poi.name + "'");
  }
  for (std::size_t i = 0; i < config.obstacles.size(); ++i) {
    const auto& box = config.obstacles[i];
    const std::string field = "obstacles[" + std::to_string(i) + "]";
    if ((box.extent.array() <= 0.0).any()) throw ConfigError(field + ".extent", "must be positive");
    if (!config.bounds.contains(box.lower().head<2>()) || !config.bounds.contains(box.upper().head<2>())) {
      throw ConfigError(field, "obstacle lies outside bounds");
    }
  }
  const auto& r = config.rates;
  if (!(r.walk_speed > 0.0) || !(r.chase_speed > 0.0)) throw ConfigError("rates.walk_speed", "speeds must be positive");
  if (r.converse_min < 0.0 || r.converse_max < r.converse_min) throw ConfigError("rates.converse_min", "invalid conversation range");
  if (r.wait_max < 0.0) throw ConfigError("rates.wait_max", "must be non-negative");
  if (r.voxel_rate < 0.0 || r.tx_rate < 0.0 || r.words_per_second < 0.0) throw ConfigError("rates", "rates must be non-negative");
  if (r.tx_amount_max < 1.0) throw ConfigError("rates.tx_amount_max", "must be at least 1");
  if (r.poi_bias < 0.0 || r.poi_bias > 1.0) throw ConfigError("rates.poi_bias", "must lie in [0, 1]");
}

WorldConfig default_world_config() {
  WorldConfig config;
  config.bounds = Rect{{0.0, 0.0}, {200.0, 150.0}};
  config.pois = {
      {"Start-up Zone", {30.0, 30.0}},      {"University Gate", {100.0, 12.0}},
      {"Library A", {60.0, 80.0}},          {"Library B", {140.0, 80.0}},
      {"College A", {170.0, 125.0}},        {"Student Center", {100.0, 70.0}},
      {"Teaching Buildings", {35.0, 125.0}}, {"Bus Station", {180.0, 20.0}},
  };
  config.obstacles = {
      Box{{45.0, 88.0, 0.0}, {30.0, 16.0, 18.0}},   // library A block
      Box{{125.0, 88.0, 0.0}, {30.0, 16.0, 18.0}},  // library B block
      Box{{20.0, 132.0, 0.0}, {30.0, 12.0, 24.0}},  // teaching buildings
      Box{{85.0, 40.0, 0.0}, {30.0, 16.0, 12.0}},   // student center hall
  };
  config.avatar_count = 16;
  config.tick_rate = 20.0;
  config.seed = 42;
  return config;
}

WorldState spawn_world(const WorldConfig& config) {
  validate(config);
  WorldState world;
  world.config = std::make_shared<const WorldConfig>(config);
  world.avatars.reserve(static_cast<std::size_t>(config.avatar_count));
  world.streams.reserve(static_cast<std::size_t>(config.avatar_count));
  for (int i = 0; i < config.avatar_count; ++i) {
    std::mt19937_64 rng(derive_seed(config.seed, static_cast<std::uint64_t>(i)));
    AvatarState avatar;
    avatar.id = i;
    avatar.height = config.avatar_height;
    const Eigen::Vector2d p = free_point(config, rng, config.bounds.center());
    avatar.position = Eigen::Vector3d(p.x(), p.y(), 0.0);
    avatar.facing = uniform(rng, 0.0, kTwoPi);
    avatar.behavior = phase::Walk{pick_destination(config, rng, p)};
    world.avatars.push_back(std::move(avatar));
    world.streams.push_back(rng);
  }
  return world;
}

void advance(WorldState& world, double dt) {
  for (std::size_t i = 0; i < world.avatars.size(); ++i) step_avatar(world, i, dt);
  ++world.tick;
  world.time = static_cast<double>(world.tick) / world.config->tick_rate;
}

void reset_windows(WorldState& world) {
  for (auto& avatar : world.avatars) avatar.metrics = ActionSample{};
}

int DensityMap::total() const {
  int sum = 0;
  for (int c : counts) sum += c;
  return sum;
}

Eigen::Vector2d DensityMap::cell_center(int index) const {
  const int ix = index % nx;
  const int iy = index / nx;
  return origin + cell_size * Eigen::Vector2d(ix + 0.5, iy + 0.5);
}

int DensityMap::cell_of(const Eigen::Vector2d& p) const {
  const Eigen::Vector2d rel = (p - origin) / cell_size;
  const int ix = std::clamp(static_cast<int>(std::floor(rel.x())), 0, nx - 1);
  const int iy = std::clamp(static_cast<int>(std::floor(rel.y())), 0, ny - 1);
  return iy * nx + ix;
}

DensityMap region_density(const WorldState& world, double cell_size) {
  if (!(cell_size > 0.0)) throw ConfigError("cell_size", "must be positive");
  const Rect& bounds = world.config->bounds;
  DensityMap map;
  map.origin = bounds.min;
  map.cell_size = cell_size;
  map.nx = std::max(1, static_cast<int>(std::ceil(bounds.size().x() / cell_size)));
  map.ny = std::max(1, static_cast<int>(std::ceil(bounds.size().y() / cell_size)));
  map.counts.assign(static_cast<std::size_t>(map.nx * map.ny), 0);
  for (const auto& avatar : world.avatars) ++map.counts[static_cast<std::size_t>(map.cell_of(avatar.ground()))];
  return map;
}

}  // namespace announcer
