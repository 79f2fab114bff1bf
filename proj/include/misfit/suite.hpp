#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "misfit/errors.hpp"

namespace misfit {

struct ExperimentSpec {
    std::string name;
    std::string command;
    nlohmann::json parameters = nlohmann::json::object();
    std::uint64_t seed = 0;
    std::string output_path; // empty: derived from the name

    // optional acceptance predicates: {"metric": {"le": v}} / {"ge": v} / {"lt"} / {"gt"}
    nlohmann::json asserts = nlohmann::json::object();
};

struct ResultRecord {
    std::string name;
    std::string spec_hash; // FNV-1a of the canonical spec JSON
    std::string timestamp; // ISO 8601 UTC
    std::map<std::string, double> metrics;
    double runtime_seconds = 0.0;
    bool passed = true;
    std::string error; // empty on success
    std::string output_path;
};

struct CommandResult {
    std::map<std::string, double> metrics;
    nlohmann::json output; // full structured result
};

/// Executes one named command with JSON parameters. All randomness is drawn
/// from generators derived from `seed`; identical inputs give identical
/// metrics. Shared by the CLI subcommands and the suite runner.
CommandResult run_command(const std::string& command, const nlohmann::json& parameters,
                          std::uint64_t seed);

/// Runs every spec in the manifest (JSON array), writes one JSON record per
/// spec plus an aggregate CSV into out_dir. Per-spec failures are recorded,
/// not fatal. workers <= 0 picks a default; the MISFITLAB_WORKERS
/// environment variable overrides the argument.
std::vector<ResultRecord> run_suite(const std::string& manifest_path,
                                    const std::string& out_dir, int workers = 0);

enum class PlotKind { ClVsL, DensityHistogram, GapConvergence, LambdaLimit };

PlotKind plot_kind_from_string(const std::string& s);

/// Plain CSV with a one-line header; returns the path written.
std::string emit_plot_data(const std::vector<ResultRecord>& records, PlotKind kind,
                           const std::string& out_path);

// helpers shared with the CLI
std::string format_real(double v); // 17 significant digits, '.' decimal point
std::string fnv1a_hex(const std::string& data);
ExperimentSpec spec_from_json(const nlohmann::json& j);
nlohmann::json record_to_json(const ResultRecord& r);

} // namespace misfit
