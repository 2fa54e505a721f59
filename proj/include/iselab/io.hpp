#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "iselab/eigensolve.hpp"
#include "iselab/potentials.hpp"

namespace iselab {

struct ExperimentPlan;
struct ISEReport;
struct LiftingRecord;
struct IDSRecord;

inline constexpr const char* tool_version = "0.1.0";

// Model files: {dimension?, G, V0: {kind, params}, single_site: {kind, c, delta, ...,
// lattice: {offset} | centers: [{site, center}]}, disorder: {kind, eta?, kappa?, ...}}.
// Unknown keys are rejected.
PotentialModel model_from_json(const nlohmann::json& j);
nlohmann::ordered_json model_to_json(const PotentialModel& m);
PotentialModel load_model(const std::filesystem::path& path);

SolverOptions solver_from_json(const nlohmann::json& j);
nlohmann::ordered_json solver_to_json(const SolverOptions& s);

/// `model` may be inline or a path relative to the plan file.
ExperimentPlan plan_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
ExperimentPlan load_plan(const std::filesystem::path& path);

nlohmann::json read_json_file(const std::filesystem::path& path);

/// FNV-1a 64 of "blob <size>\0<content>", as 16 hex digits.
std::string content_hash(const std::string& content);

struct RunManifest {
    std::string version = tool_version;
    std::string subcommand;
    nlohmann::ordered_json parameters;  // fully resolved
    std::string input_hash;             // content_hash of the canonical parameter dump
    double wall_clock_seconds = 0.0;
    int workers = 1;

    static RunManifest make(std::string subcommand, nlohmann::ordered_json parameters, int workers);
    nlohmann::ordered_json to_json() const;
};

/// 17 significant digits; "nan", "inf", "-inf" for non-finite values.
std::string format_real(double v);
/// RFC 4180 field quoting.
std::string csv_field(const std::string& s);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// '#' manifest line, then CRLF-terminated records.
    std::string render(const RunManifest* manifest = nullptr) const;
    /// Records only; what determinism checks compare.
    std::string data_section() const;
};

/// {"manifest": ..., "data": ...} with two-space indentation.
std::string render_json_artifact(const RunManifest& manifest, const nlohmann::ordered_json& data);
void write_text_file(const std::filesystem::path& path, const std::string& text);

CsvTable ise_summary_table(const ISEReport& report);
CsvTable lifting_table(const std::vector<LiftingRecord>& records);
CsvTable ids_table(const IDSRecord& record);

/// p̂ against L with the Wilson intervals and the 1 − L^{−q} curve.
std::string ise_svg_plot(const ISEReport& report);

} // namespace iselab
