#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "pentrace/signal.hpp"

namespace pentrace {

// Parse/format error carrying the 1-based line number within the SVC file
// (line 1 is the sample-count header).
class SvcError : public std::runtime_error {
 public:
  SvcError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// SVC text format: first line is the sample count, then one sample per line as
// "x y t pen_status azimuth tilt pressure" (all integers; t in raw ticks).
// tick_rate scales ticks to seconds.
Session parse_svc(std::string_view text, double tick_rate = 1000.0);

// Canonical form: single-space separated integers, '\n' line endings.
// parse_svc(serialize_svc(s)) reproduces the sample values exactly and
// serialize_svc is byte-stable, so canonical files round-trip byte-identical.
std::string serialize_svc(const Session& session);

// Sidecar JSON with subject metadata (subject_id, sex, class_year, diagnosis,
// hpsqc, tick_rate, units_per_mm, sampling_rate).
std::string serialize_sidecar(const Session& session);
void apply_sidecar(Session& session, std::string_view json_text);

// Loads <stem>.svc plus <stem>.json sidecar when present.
Session load_session(const std::filesystem::path& svc_path);
void save_session(const Session& session, const std::filesystem::path& svc_path);

}  // namespace pentrace
