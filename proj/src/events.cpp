#include "announcer/events.hpp"

#include "announcer/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace announcer {

const char* to_string(Channel channel) {
  switch (channel) {
    case Channel::MoveDistance: return "move_distance";
    case Channel::MoveSpeed: return "move_speed";
    case Channel::SpokenWords: return "spoken_words";
    case Channel::VoxelCount: return "voxel_count";
    case Channel::TxVolume: return "tx_volume";
  }
  return "unknown";
}

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::LocalSingle: return "local_single";
    case EventKind::LocalMulti: return "local_multi";
    case EventKind::Global: return "global";
  }
  return "unknown";
}

ChannelVector channels(const ActionSample& s) {
  ChannelVector v;
  v << s.move_distance, s.move_speed, s.spoken_words, s.voxel_count, s.tx_volume;
  return v;
}

ImportanceWeights ImportanceWeights::defaults() {
  ImportanceWeights weights;
  weights.w << 0.1, 0.2, 0.5, 2.0, 2.0;
  return weights;
}

void validate(const ImportanceWeights& weights) {
  for (int c = 0; c < kChannelCount; ++c) {
    if (!(weights.w[c] >= 0.0)) {
      throw ConfigError(std::string("events.weights.") + to_string(static_cast<Channel>(c)), "must be non-negative");
    }
  }
  if (!(weights.w.maxCoeff() > 0.0)) throw ConfigError("events.weights", "at least one weight must be positive");
}

double dynamic_threshold(int online, double f) {
  if (online < 1) throw std::domain_error("dynamic_threshold: online count must be at least 1");
  if (!(f >= 0.0 && f <= 1.0)) throw std::domain_error("dynamic_threshold: f must lie in [0, 1]");
  return 1.0 - std::pow(f, 1.0 / static_cast<double>(online));
}

double normal_quantile(double p) {
  if (std::isnan(p) || p < 0.0 || p > 1.0) return std::numeric_limits<double>::quiet_NaN();
  if (p == 0.0) return -std::numeric_limits<double>::infinity();
  if (p == 1.0) return std::numeric_limits<double>::infinity();

  // Acklam's rational approximation followed by one Halley step.
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
                                 1.383577518672690e+02,  -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
                                 6.680131188771972e+01,  -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
                                 -2.549732539343734e+00, 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
                                 3.754408661907416e+00};
  constexpr double low = 0.02425;
  double x;
  if (p < low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else if (p <= 1.0 - low) {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  } else {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double e = 0.5 * std::erfc(-x / std::numbers::sqrt2) - p;
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

ThresholdState ThresholdState::make(double f, int online, const ImportanceModel& model) {
  ThresholdState state;
  state.f = f;
  state.online = online;
  state.i = dynamic_threshold(online, 1.0 - f);
  state.cutoff = model.mu + model.sigma * normal_quantile(1.0 - state.i);
  return state;
}

ImportanceModel calibrate_model(std::span<const double> history, std::size_t window, ImportanceModel prior,
                                double sigma_floor) {
  if (window > 0 && history.size() > window) history = history.last(window);
  if (history.size() < 2) return prior;
  const Eigen::Map<const Eigen::VectorXd> v(history.data(), static_cast<Eigen::Index>(history.size()));
  const double mean = v.mean();
  const double var = (v.array() - mean).square().sum() / static_cast<double>(history.size() - 1);
  return ImportanceModel{mean, std::max(std::sqrt(var), sigma_floor)};
}

std::optional<Event> detect_global(const DensityMap& density, int threshold, double coefficient, double timestamp) {
  int best = -1;
  int best_count = 0;
  for (int idx = 0; idx < static_cast<int>(density.counts.size()); ++idx) {
    const int count = density.counts[static_cast<std::size_t>(idx)];
    if (count >= threshold && count > best_count) {
      best = idx;
      best_count = count;
    }
  }
  if (best < 0) return std::nullopt;
  Event event;
  event.kind = EventKind::Global;
  event.region = Region{density.cell_center(best), density.cell_size * std::numbers::sqrt2 / 2.0};
  event.score = coefficient * best_count;
  event.timestamp = timestamp;
  return event;
}

namespace {

struct Candidate {
  double score;
  int lead;  // lowest member id, or max int for global
  Event event;
};

bool better(const Candidate& a, const Candidate& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.lead < b.lead;
}

}  // namespace

std::optional<Event> fetch_events(const WorldState& world, const ThresholdState& state, const EventConfig& config,
                                  double clock, const FetchOptions& options) {
  const auto& avatars = world.avatars;
  const std::size_t n = avatars.size();
  std::vector<double> scores(n);
  std::vector<bool> above(n, false);
  for (std::size_t k = 0; k < n; ++k) {
    scores[k] = importance(avatars[k].metrics, config.weights);
    above[k] = options.force_hit || scores[k] > state.cutoff;
  }

  // Union co-conversing above-cutoff avatars within the grouping radius.
  std::vector<std::size_t> parent(n);
  for (std::size_t k = 0; k < n; ++k) parent[k] = k;
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t k = 0; k < n; ++k) {
    const auto* talk = std::get_if<phase::Converse>(&avatars[k].behavior);
    if (!above[k] || talk == nullptr) continue;
    for (int p : talk->partners) {
      const auto q = static_cast<std::size_t>(p);
      if (q >= n || !above[q] || !std::holds_alternative<phase::Converse>(avatars[q].behavior)) continue;
      if ((avatars[q].ground() - avatars[k].ground()).norm() > config.group_radius) continue;
      const auto ra = find(k), rb = find(q);
      if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
    }
  }

  std::optional<Candidate> best;
  auto offer = [&](Candidate c) {
    if (!best || better(c, *best)) best = std::move(c);
  };

  std::vector<std::vector<int>> groups(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (above[k]) groups[find(k)].push_back(avatars[k].id);
  }
  for (std::size_t root = 0; root < n; ++root) {
    auto& members = groups[root];
    if (members.empty()) continue;
    std::sort(members.begin(), members.end());
    double score = -std::numeric_limits<double>::infinity();
    for (int m : members) score = std::max(score, scores[static_cast<std::size_t>(m)]);
    Event event;
    event.kind = members.size() == 1 ? EventKind::LocalSingle : EventKind::LocalMulti;
    event.subjects = members;
    event.score = score;
    event.timestamp = clock;
    offer(Candidate{score, members.front(), std::move(event)});
  }

  const auto density = region_density(world, config.cell_size);
  if (auto global = detect_global(density, config.gathering_threshold, options.global_coefficient, clock)) {
    offer(Candidate{global->score, std::numeric_limits<int>::max(), std::move(*global)});
  }
  if (!best) return std::nullopt;
  return std::move(best->event);
}

double empirical_hit_rate(int online, double f, std::int64_t trials, std::uint64_t seed, const ImportanceModel& model) {
  if (trials < 1) throw std::domain_error("empirical_hit_rate: trials must be at least 1");
  const ThresholdState state = ThresholdState::make(f, online, model);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> draw(model.mu, model.sigma);
  std::int64_t hits = 0;
  for (std::int64_t t = 0; t < trials; ++t) {
    bool hit = false;
    for (int k = 0; k < online; ++k) hit = (draw(rng) > state.cutoff) || hit;
    hits += hit ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(trials);
}

}  // namespace announcer
