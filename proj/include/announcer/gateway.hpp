#pragma once

#include "announcer/config.hpp"
#include "announcer/shotlog.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace announcer {

enum class SweepParam { Transition, Frequency };
std::optional<SweepParam> sweep_param_from_string(std::string_view text);
const char* to_string(SweepParam param);

struct SweepSpec {
  SweepParam param = SweepParam::Transition;
  std::vector<double> values;
  EngineConfig base;
  std::string out_dir;
};

struct SweepRow {
  double value = 0.0;
  std::int64_t announcements = 0;
  double ratio = 0.0;  // mean blend length over mean hold length, NaN without both
  double maue = 0.0;
  std::string log_path;
};

/// Engine configuration for one sweep value. Frequency values script k forced
/// hits into the fetch cycles of the run and shrink the shot timing so every
/// announcement finishes before the next fetch. Throws ConfigError when the
/// value is outside the parameter's bounds.
EngineConfig sweep_config(const EngineConfig& base, SweepParam param, double value);

/// Mean composition MOS over the Good pool under the configured rules.
double mean_good_mos(const EngineConfig& config);

/// Realized blend:hold ratio of a log; holds without a spec (global views) are excluded.
double realized_ratio(const std::vector<ShotLogRecord>& records);

/// Distinct event ids appearing in a log.
std::int64_t announcements_in(const std::vector<ShotLogRecord>& records);

/// One headless run per value, each log written to out_dir, plus summary.csv.
/// A failing run aborts the sweep after the rows already written are flushed.
std::vector<SweepRow> sweep(const SweepSpec& spec);

/// Monte Carlo hit rate of the dynamic cutoff.
double verify_threshold(int online, double f, std::int64_t trials, std::uint64_t seed = 1);

struct StoryboardOptions {
  SolveMapsd maps;
  double width = 1920.0;
  double height = 1080.0;
};

/// SVG document for one hold record (must carry an avatar roster).
std::string storyboard_svg(const ShotLogRecord& hold, const StoryboardOptions& options = {});

/// Writes hold_NNNN.svg for every hold in the log; returns the written paths.
std::vector<std::string> export_storyboard(const std::vector<ShotLogRecord>& records, const std::string& out_dir,
                                           const StoryboardOptions& options = {});

/// Reference projections for cross-checking other renderers: solved camera
/// poses with world points and the pixels project() assigns them. Pretty JSON.
std::string projection_golden(std::uint64_t seed = 7, int cases = 48, const StoryboardOptions& options = {});

}  // namespace announcer
