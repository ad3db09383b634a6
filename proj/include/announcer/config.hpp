#pragma once

#include "announcer/adapt.hpp"
#include "announcer/composition.hpp"
#include "announcer/director.hpp"
#include "announcer/events.hpp"
#include "announcer/psl.hpp"
#include "announcer/world.hpp"

#include <optional>
#include <string>
#include <vector>

namespace announcer {

struct SteeringConfig {
  bool enabled = true;
  std::size_t window = 10;  // most recent announcement kinds considered
  SteeringParams params;
};

/// Everything a run needs. The QoE block is authoritative for durations, f,
/// fetch period and the global coefficient; the director and event configs
/// are refreshed from it by the engine.
struct EngineConfig {
  WorldConfig world = default_world_config();
  double duration_s = 60.0;

  EventConfig events;
  std::vector<bool> hit_pattern;  // scripted fetch outcomes, cycled; empty = threshold driven

  SolveMapsd psl;
  RuleSet rules;
  CompositionTable table = CompositionTable::defaults();

  DirectorConfig director;
  std::optional<PatrolTrace> trace;  // default: inset rectangle over the world bounds

  QoEConfig qoe;
  MAUETable maue = MAUETable::defaults();
  MaueWeights maue_weights;
  SteeringConfig steering;
  double pacing_period = 600.0;
  PreferenceStore preferences;
  std::optional<std::string> preferences_path;
};

/// Cross-field validation; throws ConfigError naming the field.
void validate(const EngineConfig& config);

PatrolTrace trace_for(const EngineConfig& config);

/// Overlays a scenario document: seed, duration_s, avatar_count, bounds, pois,
/// obstacles, rates. Absent keys keep their current values.
void apply_scenario(EngineConfig& config, const std::string& json_text);

/// Overlays an engine settings document with "events", "psl", "composition",
/// "director" and "adapt" sections. Relative file paths resolve against `base_dir`.
void apply_settings(EngineConfig& config, const std::string& json_text, const std::string& base_dir = ".");

/// Defaults, then the optional scenario file, then the optional settings file.
EngineConfig load_engine_config(const std::optional<std::string>& scenario_path,
                                const std::optional<std::string>& settings_path);

std::string read_text_file(const std::string& path, const std::string& field);

}  // namespace announcer
