#include "announcer/config.hpp"

#include "announcer/errors.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace announcer {

using nlohmann::json;

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

json parse_document(const std::string& text, const std::string& field) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(field, e.what());
  }
}

/// Typed accessors over one JSON object that name the failing field.
class Section {
 public:
  Section(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  void allow(std::initializer_list<const char*> keys) const {
    std::set<std::string> known(keys.begin(), keys.end());
    for (const auto& item : node_.items()) {
      if (!known.contains(item.key())) throw ConfigError(join(path_, item.key()), "unknown key");
    }
  }

  bool has(const char* key) const { return node_.contains(key); }
  std::string field(const std::string& key) const { return join(path_, key); }
  const json& raw(const char* key) const { return node_.at(key); }

  Section child(const char* key) const { return Section(node_.at(key), field(key)); }

  void number(const char* key, double& out) const {
    if (!has(key)) return;
    const auto& v = node_.at(key);
    if (!v.is_number()) throw ConfigError(field(key), "expected a number");
    out = v.get<double>();
  }

  template <typename Int>
  void integer(const char* key, Int& out) const {
    if (!has(key)) return;
    const auto& v = node_.at(key);
    if (!v.is_number_integer()) throw ConfigError(field(key), "expected an integer");
    if constexpr (std::is_unsigned_v<Int>) {
      if (v.is_number_unsigned()) {
        out = static_cast<Int>(v.get<std::uint64_t>());
      } else if (v.get<std::int64_t>() < 0) {
        throw ConfigError(field(key), "expected a non-negative integer");
      } else {
        out = static_cast<Int>(v.get<std::int64_t>());
      }
    } else {
      out = static_cast<Int>(v.get<std::int64_t>());
    }
  }

  void boolean(const char* key, bool& out) const {
    if (!has(key)) return;
    const auto& v = node_.at(key);
    if (!v.is_boolean()) throw ConfigError(field(key), "expected true or false");
    out = v.get<bool>();
  }

  void string(const char* key, std::string& out) const {
    if (!has(key)) return;
    const auto& v = node_.at(key);
    if (!v.is_string()) throw ConfigError(field(key), "expected a string");
    out = v.get<std::string>();
  }

  const json& array(const char* key) const {
    const auto& v = node_.at(key);
    if (!v.is_array()) throw ConfigError(field(key), "expected an array");
    return v;
  }

 private:
  const json& node_;
  std::string path_;
};

template <int N>
Eigen::Matrix<double, N, 1> vec(const json& v, const std::string& field) {
  if (!v.is_array() || v.size() != N) throw ConfigError(field, "expected an array of " + std::to_string(N) + " numbers");
  Eigen::Matrix<double, N, 1> out;
  for (int k = 0; k < N; ++k) {
    if (!v[k].is_number()) throw ConfigError(field, "expected numbers");
    out[k] = v[k].get<double>();
  }
  return out;
}

Bounds bounds_of(const json& v, const std::string& field) {
  const Eigen::Vector2d b = vec<2>(v, field);
  if (!(b.x() <= b.y())) throw ConfigError(field, "min exceeds max");
  return {b.x(), b.y()};
}

std::string resolve(const std::string& base_dir, const std::string& path) {
  const std::filesystem::path p(path);
  return p.is_absolute() ? path : (std::filesystem::path(base_dir) / p).string();
}

void read_rates(const Section& s, MotionRates& r) {
  s.allow({"walk_speed", "chase_speed", "words_per_second", "converse_min", "converse_max", "wait_max",
           "chase_radius", "converse_distance", "chase_timeout", "voxel_rate", "tx_rate", "tx_amount_max", "poi_bias",
           "poi_jitter"});
  s.number("walk_speed", r.walk_speed);
  s.number("chase_speed", r.chase_speed);
  s.number("words_per_second", r.words_per_second);
  s.number("converse_min", r.converse_min);
  s.number("converse_max", r.converse_max);
  s.number("wait_max", r.wait_max);
  s.number("chase_radius", r.chase_radius);
  s.number("converse_distance", r.converse_distance);
  s.number("chase_timeout", r.chase_timeout);
  s.number("voxel_rate", r.voxel_rate);
  s.number("tx_rate", r.tx_rate);
  s.number("tx_amount_max", r.tx_amount_max);
  s.number("poi_bias", r.poi_bias);
  s.number("poi_jitter", r.poi_jitter);
}

void read_events(const Section& s, EngineConfig& c) {
  s.allow({"weights", "f", "fetch_period", "cell_size", "gathering_threshold", "group_radius", "history_window",
           "sigma_floor", "global_coefficient", "hit_pattern"});
  if (s.has("weights")) {
    const Section w = s.child("weights");
    w.allow({"move_distance", "move_speed", "spoken_words", "voxel_count", "tx_volume"});
    for (auto ch : {Channel::MoveDistance, Channel::MoveSpeed, Channel::SpokenWords, Channel::VoxelCount,
                    Channel::TxVolume}) {
      w.number(to_string(ch), c.events.weights[ch]);
    }
  }
  s.number("f", c.qoe.f);
  s.number("fetch_period", c.qoe.fetch_period);
  s.number("global_coefficient", c.qoe.global_coefficient);
  s.number("cell_size", c.events.cell_size);
  s.integer("gathering_threshold", c.events.gathering_threshold);
  s.number("group_radius", c.events.group_radius);
  s.integer("history_window", c.events.history_window);
  s.number("sigma_floor", c.events.sigma_floor);
  if (s.has("hit_pattern")) {
    c.hit_pattern.clear();
    for (const auto& v : s.array("hit_pattern")) {
      if (!v.is_boolean()) throw ConfigError(s.field("hit_pattern"), "expected booleans");
      c.hit_pattern.push_back(v.get<bool>());
    }
  }
}

void read_psl(const Section& s, SolveMapsd& maps) {
  s.allow({"size_distance", "angle_height", "fov_deg", "aspect"});
  if (s.has("size_distance")) {
    const Section d = s.child("size_distance");
    for (auto size : kSizes) {
      const std::string name(to_string(size));
      d.number(name.c_str(), maps.size_distance[static_cast<std::size_t>(size)]);
    }
  }
  if (s.has("angle_height")) {
    const Section h = s.child("angle_height");
    for (auto angle : kAngles) {
      const std::string name(to_string(angle));
      h.number(name.c_str(), maps.angle_height[static_cast<std::size_t>(angle)]);
    }
  }
  if (s.has("fov_deg")) {
    double deg = 0.0;
    s.number("fov_deg", deg);
    maps.fov = deg * std::numbers::pi / 180.0;
  }
  s.number("aspect", maps.aspect);
}

void read_composition(const Section& s, EngineConfig& c, const std::string& base_dir) {
  s.allow({"lookroom", "forbidden", "filters", "table", "threshold"});
  s.boolean("lookroom", c.rules.lookroom_enabled);
  if (s.has("forbidden")) {
    c.rules.forbidden.clear();
    for (const auto& pair : s.array("forbidden")) {
      const Section p(pair, s.field("forbidden[]"));
      p.allow({"profile", "screen"});
      std::string profile, screen;
      p.string("profile", profile);
      p.string("screen", screen);
      const auto pr = profile_from_string(profile);
      const auto sc = screen_from_string(screen);
      if (!pr) throw ConfigError(p.field("profile"), "unknown profile '" + profile + "'");
      if (!sc) throw ConfigError(p.field("screen"), "unknown screen '" + screen + "'");
      c.rules.forbidden.emplace_back(*pr, *sc);
    }
  }
  if (s.has("filters")) {
    c.rules.extra.clear();
    for (const auto& name : s.array("filters")) {
      if (!name.is_string()) throw ConfigError(s.field("filters"), "expected filter names");
      try {
        c.rules.extra.push_back(builtin_filter(name.get<std::string>()));
      } catch (const ConfigError& e) {
        throw ConfigError(s.field("filters"), e.what());
      }
    }
  }
  if (s.has("table")) {
    std::string path;
    s.string("table", path);
    c.table = load_composition_table(resolve(base_dir, path));
  }
  s.number("threshold", c.table.threshold);
}

void read_director(const Section& s, EngineConfig& c) {
  s.allow({"shot_duration", "transition_duration", "shots_per_event", "retry_budget", "obstacle_margin",
           "path_clearance", "viewport", "global_hold_shots", "trace"});
  s.number("shot_duration", c.qoe.shot_duration);
  s.number("transition_duration", c.qoe.transition_duration);
  s.integer("shots_per_event", c.director.shots_per_event);
  s.integer("retry_budget", c.director.retry_budget);
  s.number("obstacle_margin", c.director.obstacle_margin);
  s.number("path_clearance", c.director.path_clearance);
  s.number("global_hold_shots", c.director.global_hold_shots);
  if (s.has("viewport")) {
    const Eigen::Vector2d v = vec<2>(s.raw("viewport"), s.field("viewport"));
    c.director.viewport_width = v.x();
    c.director.viewport_height = v.y();
  }
  if (s.has("trace")) {
    const Section t = s.child("trace");
    t.allow({"points", "speed", "inset", "altitude"});
    double inset = 0.1, altitude = 25.0, speed = 4.0;
    t.number("inset", inset);
    t.number("altitude", altitude);
    t.number("speed", speed);
    PatrolTrace trace = default_trace(c.world.bounds, inset, altitude, speed);
    if (t.has("points")) {
      trace.points.clear();
      for (const auto& p : t.array("points")) trace.points.push_back(vec<3>(p, t.field("points")));
    }
    c.trace = trace;
  }
}

void read_adapt(const Section& s, EngineConfig& c, const std::string& base_dir) {
  s.allow({"bounds", "maue_table", "maue_weights", "preferences", "steering", "pacing_period"});
  if (s.has("bounds")) {
    const Section b = s.child("bounds");
    b.allow({"transition", "shot", "f", "fetch", "coefficient"});
    auto& qb = c.qoe.bounds;
    if (b.has("transition")) qb.transition = bounds_of(b.raw("transition"), b.field("transition"));
    if (b.has("shot")) qb.shot = bounds_of(b.raw("shot"), b.field("shot"));
    if (b.has("f")) qb.f = bounds_of(b.raw("f"), b.field("f"));
    if (b.has("fetch")) qb.fetch = bounds_of(b.raw("fetch"), b.field("fetch"));
    if (b.has("coefficient")) qb.coefficient = bounds_of(b.raw("coefficient"), b.field("coefficient"));
    c.steering.params.range = qb.coefficient;
  }
  if (s.has("maue_table")) {
    std::string path;
    s.string("maue_table", path);
    c.maue = load_maue_table(resolve(base_dir, path));
  }
  if (s.has("maue_weights")) {
    const Section w = s.child("maue_weights");
    w.allow({"transition", "repetition", "composition"});
    w.number("transition", c.maue_weights.transition);
    w.number("repetition", c.maue_weights.repetition);
    w.number("composition", c.maue_weights.composition);
  }
  if (s.has("preferences")) {
    std::string path;
    s.string("preferences", path);
    c.preferences_path = resolve(base_dir, path);
    if (std::filesystem::exists(*c.preferences_path)) c.preferences = load_preferences(*c.preferences_path);
  }
  if (s.has("steering")) {
    const Section st = s.child("steering");
    st.allow({"enabled", "window", "eta", "target_share"});
    st.boolean("enabled", c.steering.enabled);
    st.integer("window", c.steering.window);
    st.number("eta", c.steering.params.eta);
    st.number("target_share", c.steering.params.target_share);
  }
  s.number("pacing_period", c.pacing_period);
}

}  // namespace

std::string read_text_file(const std::string& path, const std::string& field) {
  std::ifstream in(path);
  if (!in) throw ConfigError(field, "cannot read '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void validate(const EngineConfig& c) {
  validate(c.world);
  validate(c.events.weights);
  validate(c.psl);
  validate(c.qoe);
  validate(c.maue);
  if (!(c.duration_s > 0.0)) throw ConfigError("duration_s", "must be positive");
  if (!(c.events.cell_size > 0.0)) throw ConfigError("events.cell_size", "must be positive");
  if (c.events.gathering_threshold < 1) throw ConfigError("events.gathering_threshold", "must be at least 1");
  if (!(c.events.group_radius >= 0.0)) throw ConfigError("events.group_radius", "must be non-negative");
  if (c.events.history_window < 2) throw ConfigError("events.history_window", "must be at least 2");
  if (c.director.shots_per_event < 1) throw ConfigError("director.shots_per_event", "must be at least 1");
  if (c.director.retry_budget < 0) throw ConfigError("director.retry_budget", "must be non-negative");
  if (!(c.director.viewport_width > 0.0 && c.director.viewport_height > 0.0)) {
    throw ConfigError("director.viewport", "must be positive");
  }
  if (!(c.director.global_hold_shots > 0.0)) throw ConfigError("director.global_hold_shots", "must be positive");
  if (!(c.table.threshold >= 1.0 && c.table.threshold <= 5.0)) {
    throw ConfigError("composition.threshold", "must lie in [1, 5]");
  }
  if (c.steering.window < 1) throw ConfigError("adapt.steering.window", "must be at least 1");
  if (!(c.pacing_period > 0.0)) throw ConfigError("adapt.pacing_period", "must be positive");
  validate(trace_for(c), c.world.obstacles);
}

PatrolTrace trace_for(const EngineConfig& c) {
  PatrolTrace trace = c.trace ? *c.trace : default_trace(c.world.bounds);
  trace.look_target = Eigen::Vector3d(c.world.bounds.center().x(), c.world.bounds.center().y(), 0.0);
  return trace;
}

void apply_scenario(EngineConfig& c, const std::string& json_text) {
  const json doc = parse_document(json_text, "scenario");
  const Section s(doc, "");
  s.allow({"seed", "duration_s", "avatar_count", "tick_rate", "avatar_height", "bounds", "pois", "obstacles",
           "rates"});
  s.integer("seed", c.world.seed);
  s.number("duration_s", c.duration_s);
  s.integer("avatar_count", c.world.avatar_count);
  s.number("tick_rate", c.world.tick_rate);
  s.number("avatar_height", c.world.avatar_height);
  if (s.has("bounds")) {
    const Section b = s.child("bounds");
    b.allow({"min", "max"});
    if (b.has("min")) c.world.bounds.min = vec<2>(b.raw("min"), b.field("min"));
    if (b.has("max")) c.world.bounds.max = vec<2>(b.raw("max"), b.field("max"));
  }
  if (s.has("pois")) {
    c.world.pois.clear();
    std::size_t k = 0;
    for (const auto& item : s.array("pois")) {
      const Section p(item, "pois[" + std::to_string(k++) + "]");
      p.allow({"name", "x", "y"});
      PointOfInterest poi;
      if (!p.has("name") || !p.has("x") || !p.has("y")) throw ConfigError(p.field("name"), "name, x and y are required");
      p.string("name", poi.name);
      p.number("x", poi.position.x());
      p.number("y", poi.position.y());
      c.world.pois.push_back(poi);
    }
  }
  if (s.has("obstacles")) {
    c.world.obstacles.clear();
    std::size_t k = 0;
    for (const auto& item : s.array("obstacles")) {
      const Section o(item, "obstacles[" + std::to_string(k++) + "]");
      o.allow({"position", "extent"});
      if (!o.has("position") || !o.has("extent")) throw ConfigError(o.field("position"), "position and extent are required");
      Box box;
      box.position = vec<3>(o.raw("position"), o.field("position"));
      box.extent = vec<3>(o.raw("extent"), o.field("extent"));
      c.world.obstacles.push_back(box);
    }
  }
  if (s.has("rates")) read_rates(s.child("rates"), c.world.rates);
  if (c.trace) c.trace.reset();  // bounds may have moved; traces come from settings
}

void apply_settings(EngineConfig& c, const std::string& json_text, const std::string& base_dir) {
  const json doc = parse_document(json_text, "config");
  const Section s(doc, "");
  s.allow({"events", "psl", "composition", "director", "adapt"});
  if (s.has("events")) read_events(s.child("events"), c);
  if (s.has("psl")) read_psl(s.child("psl"), c.psl);
  if (s.has("composition")) read_composition(s.child("composition"), c, base_dir);
  if (s.has("director")) read_director(s.child("director"), c);
  if (s.has("adapt")) read_adapt(s.child("adapt"), c, base_dir);
  c.events.f = c.qoe.f;
}

EngineConfig load_engine_config(const std::optional<std::string>& scenario_path,
                                const std::optional<std::string>& settings_path) {
  EngineConfig c;
  if (scenario_path) apply_scenario(c, read_text_file(*scenario_path, "scenario"));
  if (settings_path) {
    const auto dir = std::filesystem::path(*settings_path).parent_path().string();
    apply_settings(c, read_text_file(*settings_path, "config"), dir.empty() ? "." : dir);
  }
  validate(c);
  return c;
}

}  // namespace announcer
