#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "prefopt/core.hpp"

namespace prefopt {

// One line of a session transcript. Serialized as a single JSON object:
//   {"iteration": 3, "x1": [...], "x2": [...], "outcome": "<", "timestamp": "..."}
// iteration is the 1-based index of the answered query, x1 is the incumbent
// at query time and x2 the challenger.
struct TranscriptEntry {
  std::size_t iteration = 0;
  Point x1;
  Point x2;
  PreferenceOutcome outcome = PreferenceOutcome::Equivalent;
  std::string timestamp;

  PreferenceRecord record() const { return {x1, x2, outcome}; }
};

std::string to_json_line(const TranscriptEntry& entry);
TranscriptEntry parse_transcript_line(const std::string& line);

/// UTC, ISO-8601 with milliseconds.
std::string utc_timestamp();

/// Appends one line and flushes it to disk before returning.
void append_transcript(const std::filesystem::path& path, const TranscriptEntry& entry);
/// Reads a whole transcript; blank lines are skipped, malformed ones throw.
std::vector<TranscriptEntry> read_transcript(const std::filesystem::path& path);

/// Writes through a temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace prefopt
