#include "announcer/adapt.hpp"

#include "announcer/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace announcer {

void validate(const QoEConfig& c) {
  const auto& b = c.bounds;
  auto check = [](const Bounds& bounds, double v, const char* field) {
    if (!(bounds.min <= bounds.max)) throw ConfigError(std::string("adapt.bounds.") + field, "min exceeds max");
    if (!bounds.contains(v)) throw ConfigError(field, "value outside its bounds");
  };
  check(b.transition, c.transition_duration, "transition_duration");
  check(b.shot, c.shot_duration, "shot_duration");
  check(b.f, c.f, "f");
  check(b.fetch, c.fetch_period, "fetch_period");
  check(b.coefficient, c.global_coefficient, "global_coefficient");
  if (!(c.f > 0.0 && c.f <= 1.0)) throw ConfigError("f", "must lie in (0, 1]");
  if (c.transition_duration > c.shot_duration) {
    throw ConfigError("transition_duration", "must not exceed shot_duration");
  }
}

QoEConfig clamped(QoEConfig c) {
  const auto& b = c.bounds;
  c.shot_duration = b.shot.clamp(c.shot_duration);
  c.transition_duration = std::min(b.transition.clamp(c.transition_duration), c.shot_duration);
  c.f = b.f.clamp(c.f);
  c.fetch_period = b.fetch.clamp(c.fetch_period);
  c.global_coefficient = b.coefficient.clamp(c.global_coefficient);
  return c;
}

MAUETable MAUETable::defaults() {
  MAUETable t;
  t.transition_curve = {{0, 3.0}, {1, 3.6}, {2, 4.2}, {3, 3.8}, {4, 3.2}, {5, 2.6}};
  t.repetition_curve = {{1, 3.0}, {2, 3.7}, {3, 4.3}, {4, 3.6}, {5, 3.1}};
  return t;
}

void validate(const MAUETable& table) {
  auto check = [](const std::vector<Knot>& knots, const char* field) {
    if (knots.empty()) throw ConfigError(field, "curve needs at least one knot");
    for (std::size_t i = 0; i < knots.size(); ++i) {
      if (!(knots[i].mos >= 1.0 && knots[i].mos <= 5.0)) throw ConfigError(field, "MOS must lie in [1, 5]");
      if (i > 0 && !(knots[i].x > knots[i - 1].x)) throw ConfigError(field, "abscissae must increase strictly");
    }
  };
  check(table.transition_curve, "maue.transition_curve");
  check(table.repetition_curve, "maue.repetition_curve");
}

MAUETable load_maue_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("adapt.maue_table", "cannot read '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("adapt.maue_table", e.what());
  }
  auto knots = [&](const char* key) {
    std::vector<Knot> out;
    if (!doc.contains(key) || !doc[key].is_array()) throw ConfigError(std::string("maue.") + key, "missing array");
    for (const auto& pair : doc[key]) {
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number()) {
        throw ConfigError(std::string("maue.") + key, "knots are [x, mos] pairs");
      }
      out.push_back({pair[0].get<double>(), pair[1].get<double>()});
    }
    return out;
  };
  MAUETable table{knots("transition_curve"), knots("repetition_curve")};
  validate(table);
  return table;
}

double interpolate(const std::vector<Knot>& knots, double x) {
  if (knots.empty()) return 0.0;
  if (x <= knots.front().x) return knots.front().mos;
  if (x >= knots.back().x) return knots.back().mos;
  const auto hi = std::upper_bound(knots.begin(), knots.end(), x, [](double v, const Knot& k) { return v < k.x; });
  const auto lo = hi - 1;
  const double w = (x - lo->x) / (hi->x - lo->x);
  return (1.0 - w) * lo->mos + w * hi->mos;
}

double maue_score(double transition_s, double switches_per_min, double composition_mos, const MAUETable& table,
                  const MaueWeights& weights) {
  const double total = weights.transition + weights.repetition + weights.composition;
  const double mixed = (weights.transition * interpolate(table.transition_curve, transition_s) +
                        weights.repetition * interpolate(table.repetition_curve, switches_per_min) +
                        weights.composition * composition_mos) /
                       total;
  return std::clamp(mixed, 1.0, 5.0);
}

const char* to_string(FeedbackKind kind) {
  switch (kind) {
    case FeedbackKind::CompUp: return "CompUp";
    case FeedbackKind::CompDown: return "CompDown";
    case FeedbackKind::SpeedUp: return "SpeedUp";
    case FeedbackKind::SlowDown: return "SlowDown";
  }
  return "?";
}

std::optional<FeedbackKind> feedback_kind_from_string(std::string_view text) {
  for (auto k : {FeedbackKind::CompUp, FeedbackKind::CompDown, FeedbackKind::SpeedUp, FeedbackKind::SlowDown}) {
    if (text == to_string(k)) return k;
  }
  return std::nullopt;
}

const PreferenceDeltas* PreferenceStore::deltas(const std::string& session) const {
  const auto it = sessions.find(session);
  return it == sessions.end() ? nullptr : &it->second;
}

std::string to_json(const PreferenceStore& store) {
  nlohmann::json doc = nlohmann::json::object();
  for (const auto& [session, deltas] : store.sessions) {
    nlohmann::json entry = nlohmann::json::object();
    for (const auto& [key, delta] : deltas) entry[key] = delta;
    doc[session] = entry;
  }
  return doc.dump(2);
}

PreferenceStore preference_store_from_json(const std::string& text) {
  PreferenceStore store;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("preferences", e.what());
  }
  if (!doc.is_object()) throw ConfigError("preferences", "expected an object keyed by session id");
  for (const auto& [session, entry] : doc.items()) {
    if (!entry.is_object()) throw ConfigError("preferences." + session, "expected an object");
    for (const auto& [key, delta] : entry.items()) {
      if (!delta.is_number()) throw ConfigError("preferences." + session + "." + key, "expected a number");
      store.sessions[session][key] = delta.get<double>();
    }
  }
  return store;
}

void save(const PreferenceStore& store, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write preferences to '" + path + "'");
  out << to_json(store) << '\n';
}

PreferenceStore load_preferences(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("adapt.preferences", "cannot read '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return preference_store_from_json(buffer.str());
}

void apply_feedback_in_place(QoEConfig& config, PreferenceStore& prefs, const FeedbackEvent& fb,
                             const CompositionTable& table, const FeedbackSteps& steps) {
  switch (fb.kind) {
    case FeedbackKind::CompUp:
    case FeedbackKind::CompDown: {
      if (!fb.context) throw std::invalid_argument("composition feedback requires a spec context");
      ShotSpec spec;
      try {
        spec = parse(*fb.context);
      } catch (const ParseError& e) {
        throw std::invalid_argument(std::string("composition feedback context: ") + e.what());
      }
      const double base = score(spec, table);
      auto& delta = prefs.sessions[fb.session][composition_key(spec)];
      delta += fb.kind == FeedbackKind::CompUp ? steps.composition : -steps.composition;
      delta = std::clamp(delta, 1.0 - base, 5.0 - base);
      break;
    }
    case FeedbackKind::SpeedUp:
      config.transition_duration *= steps.speed_transition;
      if (config.transition_duration < steps.transition_floor) config.transition_duration = config.bounds.transition.min;
      config.fetch_period *= steps.speed_fetch;
      break;
    case FeedbackKind::SlowDown:
      config.transition_duration =
          std::max(config.transition_duration / steps.speed_transition, steps.transition_floor);
      config.fetch_period /= steps.speed_fetch;
      break;
  }
  config = clamped(config);
}

std::pair<QoEConfig, PreferenceStore> apply_feedback(QoEConfig config, PreferenceStore prefs,
                                                      const std::optional<FeedbackEvent>& fb,
                                                      const CompositionTable& table, const FeedbackSteps& steps) {
  if (fb) apply_feedback_in_place(config, prefs, *fb, table, steps);
  return {std::move(config), std::move(prefs)};
}

const char* to_string(Prompt::Kind kind) {
  return kind == Prompt::Kind::Composition ? "composition" : "pacing";
}

std::vector<Prompt> ema_schedule(double now, EmaState& state, std::span<const EndedEvent> ended) {
  std::vector<Prompt> due;
  for (const auto& e : ended) {
    if (e.t <= now) due.push_back(Prompt{Prompt::Kind::Composition, e.t, e.id, e.spec});
  }
  while (state.pacing_period > 0.0 && state.last_pacing + state.pacing_period <= now) {
    state.last_pacing += state.pacing_period;
    due.push_back(Prompt{Prompt::Kind::Pacing, state.last_pacing, std::nullopt, std::nullopt});
  }
  return due;
}

double steer_global_coefficient(std::span<const EventKind> window, double coefficient, const SteeringParams& params) {
  if (window.empty()) return params.range.clamp(coefficient);
  const auto globals = std::count(window.begin(), window.end(), EventKind::Global);
  const double share = static_cast<double>(globals) / static_cast<double>(window.size());
  if (share < params.target_share) {
    coefficient *= 1.0 + params.eta;
  } else if (share > params.target_share) {
    coefficient *= 1.0 - params.eta;
  }
  return params.range.clamp(coefficient);
}

}  // namespace announcer
