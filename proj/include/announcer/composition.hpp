#pragma once

#include "announcer/psl.hpp"

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

namespace announcer {

/// Which way the subject appears to face on screen for a given profile.
/// Right-family profiles put the camera on the subject's right, so the
/// subject looks toward screen-right.
enum class Laterality { None, FacesScreenRight, FacesScreenLeft };
Laterality laterality(Profile p);

/// Look room: false when the subject is placed at the screen edge it faces.
bool lookroom_filter(const ShotSpec& spec);

struct NamedFilter {
  std::string name;
  std::function<bool(const ShotSpec&)> keep;
};

/// Built-in predicates addressable from the engine config:
/// "no_close_sizes" (drops ECU/BCU/CU), "no_high_ms", "no_back".
/// Throws ConfigError for unknown names.
NamedFilter builtin_filter(const std::string& name);

struct RuleSet {
  bool lookroom_enabled = true;
  std::vector<std::pair<Profile, Screen>> forbidden;
  std::vector<NamedFilter> extra;

  static RuleSet disabled() { return RuleSet{false, {}, {}}; }
};

bool passes(const ShotSpec& spec, const RuleSet& rules);

struct FilterReport {
  std::vector<ShotSpec> kept;  // input order preserved
  std::size_t surviving = 0;
  std::size_t removed = 0;
};

FilterReport filter_all(const std::vector<ShotSpec>& specs, const RuleSet& rules);

struct CompositionKey {
  Angle angle;
  Size size;
  Profile profile;
  Screen screen;

  static CompositionKey of(const ShotSpec& s) { return {s.angle, s.size, s.profile, s.screen}; }
  auto operator<=>(const CompositionKey&) const = default;
};

/// Mean opinion scores keyed by composition. Missing keys fall back to
/// `heuristic_prior`.
struct CompositionTable {
  std::map<CompositionKey, double> entries;
  double threshold = 3.5;

  /// The published anchor rows (ranks 1-5, 110, 151-153).
  static CompositionTable defaults();
};

/// Synthetic prior for compositions without a measured score: 3.8 base,
/// -1.5 for High+MS, -0.3 for back-family profiles, -0.2 for other High
/// shots, +0.2 for Eye; clamped to [1, 5].
double heuristic_prior(const ShotSpec& spec);

double score(const ShotSpec& spec, const CompositionTable& table);

/// Personal score offsets keyed by composition_key().
using PreferenceDeltas = std::map<std::string, double>;

double adjusted_score(const ShotSpec& spec, const CompositionTable& table, const PreferenceDeltas* deltas);

enum class Grade { Good, Bad };

/// Good iff score >= threshold.
Grade classify(const ShotSpec& spec, const CompositionTable& table, const PreferenceDeltas* deltas = nullptr);

struct SampleConstraints {
  RuleSet rules;
  std::vector<Size> sizes;  // empty: any size
  std::function<bool(const ShotSpec&)> predicate;
  std::vector<CompositionKey> exclude;
  const PreferenceDeltas* deltas = nullptr;
};

/// Filtered Good compositions satisfying the constraints, enumeration order.
std::vector<ShotSpec> good_pool(const CompositionTable& table, const SampleConstraints& constraints);

/// k distinct compositions drawn uniformly from good_pool(). Throws
/// PlanningError when fewer than k remain.
std::vector<ShotSpec> sample_good(std::mt19937_64& rng, int k, const CompositionTable& table,
                                  const SampleConstraints& constraints);

/// Loads [{"angle","size","profile","screen","mos"}] rows over the defaults.
CompositionTable load_composition_table(const std::string& path);
CompositionTable composition_table_from_json(const std::string& json_text);

}  // namespace announcer
