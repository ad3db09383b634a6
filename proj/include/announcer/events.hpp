#pragma once

#include "announcer/world.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace announcer {

enum class Channel { MoveDistance = 0, MoveSpeed, SpokenWords, VoxelCount, TxVolume };
inline constexpr int kChannelCount = 5;
using ChannelVector = Eigen::Matrix<double, kChannelCount, 1>;

const char* to_string(Channel channel);

/// Action sample as a channel vector, ordered as `Channel`.
ChannelVector channels(const ActionSample& sample);

struct ImportanceWeights {
  ChannelVector w = ChannelVector::Zero();

  static ImportanceWeights defaults();
  double& operator[](Channel c) { return w[static_cast<int>(c)]; }
  double operator[](Channel c) const { return w[static_cast<int>(c)]; }
};

/// Throws ConfigError when a weight is negative or all are zero.
void validate(const ImportanceWeights& weights);

/// Weighted sum of the action channels.
inline double importance(const ActionSample& sample, const ImportanceWeights& weights) {
  return channels(sample).dot(weights.w);
}

/// Threshold percentile 1 - f^(1/N). Throws std::domain_error for N = 0 or f outside [0, 1].
double dynamic_threshold(int online, double f);

/// Standard normal quantile; returns -inf / +inf at 0 / 1.
double normal_quantile(double p);

/// Running normal estimate of the importance distribution.
struct ImportanceModel {
  double mu = 0.0;
  double sigma = 1.0;
};

/// Dynamic cutoff for N online avatars and a target per-fetch hit ratio f.
///
/// `i` is the per-avatar exceedance probability. It is chosen so that at least
/// one of N independent avatars clears the cutoff with probability f, which
/// gives (1 - i)^N = 1 - f, i.e. i = dynamic_threshold(N, 1 - f). At f = 1/2
/// this is the same number as dynamic_threshold(N, f).
struct ThresholdState {
  double f = 0.5;
  int online = 1;
  double i = 0.5;
  double cutoff = 0.0;

  static ThresholdState make(double f, int online, const ImportanceModel& model);
};

/// Mean and sample standard deviation over the last `window` entries of
/// `history`. Fewer than two samples yield `prior`; sigma never drops below
/// `sigma_floor`.
ImportanceModel calibrate_model(std::span<const double> history, std::size_t window = 600,
                                ImportanceModel prior = {}, double sigma_floor = 1e-6);

enum class EventKind { LocalSingle, LocalMulti, Global };
const char* to_string(EventKind kind);

struct Region {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double radius = 0.0;
};

struct Event {
  std::int64_t id = 0;
  EventKind kind = EventKind::LocalSingle;
  std::vector<int> subjects;  // ascending ids; empty for Global
  std::optional<Region> region;
  double score = 0.0;
  double timestamp = 0.0;
};

struct EventConfig {
  ImportanceWeights weights = ImportanceWeights::defaults();
  double f = 0.5;
  double cell_size = 10.0;
  int gathering_threshold = 4;
  double group_radius = 3.0;
  std::size_t history_window = 600;
  double sigma_floor = 1e-6;
};

/// Densest cell at or above `threshold` (ties: lowest cell index), scored as
/// coefficient * count.
std::optional<Event> detect_global(const DensityMap& density, int threshold, double coefficient,
                                   double timestamp);

struct FetchOptions {
  double global_coefficient = 1.0;
  /// Elect the best candidate regardless of the cutoff (scripted schedules).
  bool force_hit = false;
};

/// Elects at most one event from the current window samples. Above-cutoff
/// avatars sharing a conversation within `group_radius` collapse into one
/// LocalMulti candidate scored by its best member.
std::optional<Event> fetch_events(const WorldState& world, const ThresholdState& state,
                                  const EventConfig& config, double clock, const FetchOptions& options = {});

/// Monte Carlo: fraction of trials in which at least one of `online` draws
/// from `model` clears the dynamic cutoff for ratio f.
double empirical_hit_rate(int online, double f, std::int64_t trials, std::uint64_t seed = 1,
                          const ImportanceModel& model = {});

}  // namespace announcer
