#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "gridshield/attackgen.hpp"
#include "gridshield/eval.hpp"

namespace gridshield::io {

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

const char* tool_version();

/// Shortest round-trip decimal form (std::to_chars); parsing recovers the
/// exact bit pattern, which is what makes trace files byte-reproducible.
std::string format_double(double v);
double parse_double(const std::string& s);

/// FNV-1a 64 fingerprint of a file's bytes, as 16 hex chars. Embedded in
/// every output file so results can be traced back to the exact config.
std::string file_fingerprint(const std::string& path);
std::string content_fingerprint(const std::string& content);

/// Writes via a temp file in the same directory, then renames into place.
void atomic_write(const std::string& path, const std::string& content);

/// Trace file: two comment lines (stream metadata, sigmas), then a CSV header
/// `index,label,attack_kind,<channel:owner:meas>...` and one row per sample
/// with columns ordered [sg | iat | td | pc].
void write_trace(const std::string& path, const attack::LabeledDataset& ds,
                 const std::string& config_hash);
attack::LabeledDataset read_trace(const std::string& path);

/// Attack manifest: every injected event with its sample range, targets and
/// magnitudes. Labels are reconstructible from the manifest alone.
void write_manifest(const std::string& path, const attack::LabeledDataset& ds,
                    const std::string& config_hash);
std::vector<attack::AttackEvent> read_manifest(const std::string& path);

void write_report_csv(const std::string& path,
                      const std::vector<eval::EvalReport>& reports,
                      const std::string& config_hash);
void write_summary_json(const std::string& path,
                        const std::vector<eval::EvalReport>& reports,
                        const std::string& config_hash);
void write_sweep_csv(const std::string& path,
                     const std::vector<eval::BetaSweepRow>& rows,
                     const std::string& config_hash);
void write_detect_log(const std::string& path, const eval::EvalReport& report,
                      const std::string& config_hash);

}  // namespace gridshield::io
