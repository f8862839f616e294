#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "acgan/config.hpp"

namespace acgan {

class MissingFileError : public Error {
public:
    using Error::Error;
};

/// Reads a config file, applies the --out / --seed overrides, and validates.
RunConfig load_run_config(const std::filesystem::path& path, const std::optional<std::string>& out_dir,
                          const std::optional<std::uint64_t>& seed);

// File names written under out_dir.
inline constexpr const char* kDatasetFile = "dataset.csv";
inline constexpr const char* kEffectiveConfigFile = "effective_config.json";
inline constexpr const char* kMetricsFile = "metrics.csv";
inline constexpr const char* kFinalCheckpointFile = "checkpoint_final.json";
inline constexpr const char* kHistogramFile = "histogram.csv";
inline constexpr const char* kReportFile = "report.json";
inline constexpr const char* kNdbFile = "ndb.json";
inline constexpr const char* kSummaryFile = "summary.json";

std::filesystem::path cmd_gen_data(const RunConfig& cfg);
std::filesystem::path cmd_train(const RunConfig& cfg);
/// checkpoint defaults to out_dir/checkpoint_final.json.
std::filesystem::path cmd_eval_conditionality(const RunConfig& cfg, const std::optional<std::filesystem::path>& checkpoint);
std::filesystem::path cmd_ndb(const RunConfig& cfg, const std::optional<std::filesystem::path>& checkpoint);
/// Summarizes every immediate subdirectory of run_dir holding report.json and effective_config.json.
std::filesystem::path cmd_report(const std::filesystem::path& run_dir, const std::optional<std::filesystem::path>& out_dir);

/// Full pipeline for each seed under both the classic and the a-contrario
/// formulation, then a report over all of them. Runs up to `jobs` pipelines at once.
std::filesystem::path cmd_sweep(const RunConfig& cfg, const std::vector<std::uint64_t>& seeds, std::size_t jobs);

}  // namespace acgan
