#pragma once

#include "announcer/director.hpp"

#include <istream>
#include <string>
#include <vector>

namespace announcer {

/// One JSON object per line: t, mode, phase, event_id, spec, pos, focus, fov,
/// plus "avatars" on the first tick of each hold.
std::string to_json_line(const ShotLogRecord& record);

/// Throws std::runtime_error on malformed lines.
ShotLogRecord record_from_json(const std::string& line);

std::vector<ShotLogRecord> read_shot_log(std::istream& in);
std::vector<ShotLogRecord> read_shot_log_file(const std::string& path);

std::optional<ModeKind> mode_from_string(std::string_view text);
std::optional<CameraPhase> phase_from_string(std::string_view text);

/// Maximal runs of consecutive records sharing phase and spec.
struct PhaseRun {
  CameraPhase phase = CameraPhase::Patrol;
  std::optional<std::int64_t> event_id;
  std::optional<std::string> spec;
  std::size_t first = 0;  // record index
  std::size_t count = 0;  // ticks
};

std::vector<PhaseRun> phase_runs(const std::vector<ShotLogRecord>& records);

}  // namespace announcer
