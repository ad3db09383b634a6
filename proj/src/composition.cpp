#include "announcer/composition.hpp"

#include "announcer/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace announcer {

Laterality laterality(Profile p) {
  switch (p) {
    case Profile::Right:
    case Profile::ThreeQuarterRight:
    case Profile::ThreeQuarterBackRight:
      return Laterality::FacesScreenRight;
    case Profile::Left:
    case Profile::ThreeQuarterLeft:
    case Profile::ThreeQuarterBackLeft:
      return Laterality::FacesScreenLeft;
    default:
      return Laterality::None;
  }
}

bool lookroom_filter(const ShotSpec& spec) {
  switch (laterality(spec.profile)) {
    case Laterality::FacesScreenRight: return spec.screen != Screen::Right;
    case Laterality::FacesScreenLeft: return spec.screen != Screen::Left;
    case Laterality::None: return true;
  }
  return true;
}

NamedFilter builtin_filter(const std::string& name) {
  if (name == "no_close_sizes") {
    return {name, [](const ShotSpec& s) { return s.size != Size::ECU && s.size != Size::BCU && s.size != Size::CU; }};
  }
  if (name == "no_high_ms") {
    return {name, [](const ShotSpec& s) { return !(s.angle == Angle::High && s.size == Size::MS); }};
  }
  if (name == "no_back") {
    return {name, [](const ShotSpec& s) {
              return s.profile != Profile::Back && s.profile != Profile::ThreeQuarterBackLeft &&
                     s.profile != Profile::ThreeQuarterBackRight;
            }};
  }
  throw ConfigError("composition.filters", "unknown filter '" + name + "'");
}

bool passes(const ShotSpec& spec, const RuleSet& rules) {
  if (rules.lookroom_enabled && !lookroom_filter(spec)) return false;
  for (const auto& [profile, screen] : rules.forbidden) {
    if (spec.profile == profile && spec.screen == screen) return false;
  }
  return std::all_of(rules.extra.begin(), rules.extra.end(), [&](const NamedFilter& f) { return f.keep(spec); });
}

FilterReport filter_all(const std::vector<ShotSpec>& specs, const RuleSet& rules) {
  FilterReport report;
  for (const auto& spec : specs) {
    if (passes(spec, rules)) report.kept.push_back(spec);
  }
  report.surviving = report.kept.size();
  report.removed = specs.size() - report.surviving;
  return report;
}

CompositionTable CompositionTable::defaults() {
  using A = Angle;
  using S = Size;
  using P = Profile;
  using Sc = Screen;
  CompositionTable table;
  table.entries = {
      {{A::Eye, S::LS, P::Right, Sc::Left}, 5.0},
      {{A::Eye, S::MCU, P::ThreeQuarterRight, Sc::Left}, 4.83},
      {{A::Low, S::LS, P::Left, Sc::Right}, 4.67},
      {{A::Eye, S::MS, P::Left, Sc::Right}, 4.67},
      {{A::Eye, S::LS, P::ThreeQuarterRight, Sc::Left}, 4.67},
      {{A::High, S::ELS, P::ThreeQuarterBackLeft, Sc::Right}, 3.5},
      {{A::High, S::MS, P::Back, Sc::Right}, 1.83},
      {{A::High, S::MS, P::Front, Sc::Right}, 1.83},
      {{A::High, S::MS, P::Back, Sc::Left}, 1.67},
  };
  return table;
}

double heuristic_prior(const ShotSpec& spec) {
  double s = 3.8;
  const bool high = spec.angle == Angle::High;
  if (high && spec.size == Size::MS) {
    s -= 1.5;
  } else if (high) {
    s -= 0.2;
  }
  if (spec.profile == Profile::Back || spec.profile == Profile::ThreeQuarterBackLeft ||
      spec.profile == Profile::ThreeQuarterBackRight) {
    s -= 0.3;
  }
  if (spec.angle == Angle::Eye) s += 0.2;
  return std::clamp(s, 1.0, 5.0);
}

double score(const ShotSpec& spec, const CompositionTable& table) {
  const auto it = table.entries.find(CompositionKey::of(spec));
  return it != table.entries.end() ? it->second : heuristic_prior(spec);
}

double adjusted_score(const ShotSpec& spec, const CompositionTable& table, const PreferenceDeltas* deltas) {
  double s = score(spec, table);
  if (deltas != nullptr) {
    if (auto it = deltas->find(composition_key(spec)); it != deltas->end()) s += it->second;
  }
  return std::clamp(s, 1.0, 5.0);
}

Grade classify(const ShotSpec& spec, const CompositionTable& table, const PreferenceDeltas* deltas) {
  return adjusted_score(spec, table, deltas) >= table.threshold ? Grade::Good : Grade::Bad;
}

std::vector<ShotSpec> good_pool(const CompositionTable& table, const SampleConstraints& constraints) {
  std::vector<ShotSpec> pool;
  for (const auto& spec : filter_all(enumerate_specs(), constraints.rules).kept) {
    if (classify(spec, table, constraints.deltas) != Grade::Good) continue;
    if (!constraints.sizes.empty() &&
        std::find(constraints.sizes.begin(), constraints.sizes.end(), spec.size) == constraints.sizes.end()) {
      continue;
    }
    if (constraints.predicate && !constraints.predicate(spec)) continue;
    const auto key = CompositionKey::of(spec);
    if (std::find(constraints.exclude.begin(), constraints.exclude.end(), key) != constraints.exclude.end()) continue;
    pool.push_back(spec);
  }
  return pool;
}

std::vector<ShotSpec> sample_good(std::mt19937_64& rng, int k, const CompositionTable& table,
                                  const SampleConstraints& constraints) {
  if (k < 1) throw PlanningError("sample_good: k must be at least 1");
  auto pool = good_pool(table, constraints);
  if (pool.size() < static_cast<std::size_t>(k)) {
    throw PlanningError("sample_good: only " + std::to_string(pool.size()) + " compositions satisfy the constraints, " +
                        std::to_string(k) + " requested");
  }
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < static_cast<std::size_t>(k); ++i) {
    const auto j = std::uniform_int_distribution<std::size_t>(i, pool.size() - 1)(rng);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(static_cast<std::size_t>(k));
  return pool;
}

CompositionTable composition_table_from_json(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("composition.table", e.what());
  }
  if (!doc.is_array()) throw ConfigError("composition.table", "expected an array of rows");
  CompositionTable table = CompositionTable::defaults();
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& row = doc[i];
    const std::string field = "composition.table[" + std::to_string(i) + "]";
    auto text = [&](const char* key) -> std::string {
      if (!row.is_object() || !row.contains(key) || !row[key].is_string()) throw ConfigError(field + "." + key, "missing string");
      return row[key].get<std::string>();
    };
    const auto angle = angle_from_string(text("angle"));
    const auto size = size_from_string(text("size"));
    const auto profile = profile_from_string(text("profile"));
    const auto screen = screen_from_string(text("screen"));
    if (!angle) throw ConfigError(field + ".angle", "unknown angle");
    if (!size) throw ConfigError(field + ".size", "unknown size");
    if (!profile) throw ConfigError(field + ".profile", "unknown profile");
    if (!screen) throw ConfigError(field + ".screen", "unknown screen");
    if (!row.contains("mos") || !row["mos"].is_number()) throw ConfigError(field + ".mos", "missing number");
    const double mos = row["mos"].get<double>();
    if (!(mos >= 1.0 && mos <= 5.0)) throw ConfigError(field + ".mos", "must lie in [1, 5]");
    table.entries[{*angle, *size, *profile, *screen}] = mos;
  }
  return table;
}

CompositionTable load_composition_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("composition.table", "cannot read '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return composition_table_from_json(buffer.str());
}

}  // namespace announcer
