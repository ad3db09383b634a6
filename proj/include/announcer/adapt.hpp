#pragma once

#include "announcer/composition.hpp"
#include "announcer/events.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace announcer {

struct Bounds {
  double min = 0.0;
  double max = 0.0;
  double clamp(double v) const { return v < min ? min : (v > max ? max : v); }
  bool contains(double v) const { return v >= min && v <= max; }
};

struct QoEBounds {
  Bounds transition{0.0, 5.0};
  Bounds shot{1.0, 10.0};
  Bounds f{0.05, 1.0};
  Bounds fetch{5.0, 30.0};
  Bounds coefficient{0.1, 10.0};
};

/// Live announcer parameters mutated by viewer feedback.
struct QoEConfig {
  double transition_duration = 2.0;
  double shot_duration = 5.0;
  double f = 0.5;
  double fetch_period = 10.0;
  double global_coefficient = 1.0;
  QoEBounds bounds;
};

/// Throws ConfigError naming the first field outside its bounds, or when the
/// transition is longer than the shot.
void validate(const QoEConfig& config);

/// Clamps every field into its bounds and the transition to at most the shot duration.
QoEConfig clamped(QoEConfig config);

/// Expected announcements per minute: f fetches hit out of 60 / fetch_period.
inline double switches_per_minute(const QoEConfig& c) { return c.f * 60.0 / c.fetch_period; }

struct Knot {
  double x = 0.0;
  double mos = 0.0;
};

/// Factor curves of the quality model. The default knot values are synthetic:
/// only their ordering (transition peak at 2 s, 5 s below 0 s, repetition peak
/// at 3 switches per minute) is backed by measurements.
struct MAUETable {
  std::vector<Knot> transition_curve;
  std::vector<Knot> repetition_curve;

  static MAUETable defaults();
};

void validate(const MAUETable& table);
MAUETable load_maue_table(const std::string& path);

struct MaueWeights {
  double transition = 1.0;
  double repetition = 1.0;
  double composition = 1.0;
};

/// Piecewise-linear interpolation, constant beyond the end knots.
double interpolate(const std::vector<Knot>& knots, double x);

double maue_score(double transition_s, double switches_per_min, double composition_mos, const MAUETable& table,
                  const MaueWeights& weights = {});

/// Weighted mean of the transition, repetition and composition scores, clamped to [1, 5].
inline double maue_estimate(const QoEConfig& config, const MAUETable& table, double mean_composition_mos,
                            const MaueWeights& weights = {}) {
  return maue_score(config.transition_duration, switches_per_minute(config), mean_composition_mos, table, weights);
}

enum class FeedbackKind { CompUp, CompDown, SpeedUp, SlowDown };
const char* to_string(FeedbackKind kind);
std::optional<FeedbackKind> feedback_kind_from_string(std::string_view text);

struct FeedbackEvent {
  FeedbackKind kind = FeedbackKind::SpeedUp;
  double timestamp = 0.0;
  std::optional<std::string> context;  // shot spec text, required for Comp*
  std::string session = "default";
};

/// Per-session personal offsets on composition scores.
struct PreferenceStore {
  std::map<std::string, PreferenceDeltas> sessions;

  const PreferenceDeltas* deltas(const std::string& session) const;
  bool operator==(const PreferenceStore&) const = default;
};

std::string to_json(const PreferenceStore& store);
PreferenceStore preference_store_from_json(const std::string& text);
void save(const PreferenceStore& store, const std::string& path);
PreferenceStore load_preferences(const std::string& path);

struct FeedbackSteps {
  double composition = 0.25;
  double speed_transition = 0.8;
  double speed_fetch = 0.9;
  // A geometric step never reaches a zero lower bound, so transitions shorter
  // than this snap to the bound and slowing down from there restarts here.
  double transition_floor = 0.1;
};

/// Applies one feedback event in place. Throws std::invalid_argument when a
/// composition feedback lacks a parseable spec context.
void apply_feedback_in_place(QoEConfig& config, PreferenceStore& prefs, const FeedbackEvent& fb,
                             const CompositionTable& table, const FeedbackSteps& steps = {});

/// Functional form; an empty feedback leaves both values unchanged.
std::pair<QoEConfig, PreferenceStore> apply_feedback(QoEConfig config, PreferenceStore prefs,
                                                      const std::optional<FeedbackEvent>& fb,
                                                      const CompositionTable& table, const FeedbackSteps& steps = {});

struct Prompt {
  enum class Kind { Composition, Pacing };
  Kind kind = Kind::Pacing;
  double t = 0.0;
  std::optional<std::int64_t> event_id;
  std::optional<std::string> context;
};
const char* to_string(Prompt::Kind kind);

struct EndedEvent {
  std::int64_t id = 0;
  double t = 0.0;
  std::optional<std::string> spec;  // last shot shown, if any
};

struct EmaState {
  double pacing_period = 600.0;
  double last_pacing = 0.0;  // session time of the last pacing prompt
};

/// Composition prompts for every event ended since the last call and one
/// pacing prompt per elapsed pacing period.
std::vector<Prompt> ema_schedule(double now, EmaState& state, std::span<const EndedEvent> ended);

struct SteeringParams {
  double eta = 0.05;
  double target_share = 0.5;
  Bounds range{0.1, 10.0};
};

/// Multiplicative update toward an equal share of global announcements.
double steer_global_coefficient(std::span<const EventKind> window, double coefficient, const SteeringParams& params = {});

}  // namespace announcer
