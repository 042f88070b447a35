#pragma once

// Persistence and presentation: raw per-seed CSVs, rendered tables, SVG plots,
// the run manifest, and the plain-text suite config.
//
// Output directory layout:
//   raw/<family>.csv               one row per (experiment, split seed, model seed)
//   raw/ablations_trajectories.csv per-epoch accuracy and mean class-row norm
//   raw/diagnostics.csv            metric,value
//   raw/confusion.csv              row-normalized, representative seed
//   raw/timing.csv                 only when timing was requested
//   models/*.bin                   representative hybrid and proxy models
//   tables/tables.md, tables/tables.tex
//   figures/*.svg
//   MANIFEST.txt

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "spikebench/matrix.hpp"
#include "spikebench/protocol.hpp"

namespace spikebench::report {

inline constexpr std::string_view kToolVersion = "spikebench 1.0.0";
inline constexpr std::string_view kManifestName = "MANIFEST.txt";

class ReportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Family { baselines, ablations, interaction, splits, temporal };

inline constexpr Family kFamilies[] = {Family::baselines, Family::ablations, Family::interaction,
                                       Family::splits, Family::temporal};

std::string_view to_string(Family f) noexcept;

/// Writes to a sibling temporary file, then renames over `path`.
void write_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

/// %.6f, with negative zero printed as 0.000000.
std::string fixed6(double v);

// ---------------------------------------------------------------------------
// CSV

/// Header plus rows sorted by (experiment first-appearance order, split seed, model seed).
/// Throws ReportError on an empty list or mixed per-class F1 widths.
std::string records_csv(const std::vector<protocol::RunRecord>& records);

/// experiment,split_seed,model_seed,epoch,test_accuracy_pct,mean_row_norm for records with trajectories.
std::string trajectories_csv(const std::vector<protocol::RunRecord>& records);

std::string diagnostics_csv(const protocol::DiagnosticsBundle& d);
std::string confusion_csv(const Matrix& confusion);
std::string timing_csv(const protocol::TimingReport& t);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Column index by name; throws ReportError when absent.
    std::size_t column(std::string_view name) const;
    double number(std::size_t row, std::string_view name) const;
    const std::string& text(std::size_t row, std::string_view name) const;
};

/// Comma-separated, no quoting. Throws ReportError on ragged rows or an empty file.
CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);

/// Inverse of records_csv (trajectories, predictions and models are not stored).
std::vector<protocol::RunRecord> parse_records(const CsvTable& table);

struct TrajectoryRow {
    std::string experiment;
    std::uint64_t split_seed = 0;
    std::uint64_t model_seed = 0;
    std::size_t epoch = 0;
    double test_accuracy_pct = 0.0;
    double mean_row_norm = 0.0;
};

std::vector<TrajectoryRow> parse_trajectories(const CsvTable& table);

// ---------------------------------------------------------------------------
// Tables

struct TextTable {
    std::string title;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> notes;
};

/// Tables for whatever family CSVs exist under raw_dir. Throws ReportError if none
/// exist or an expected experiment is missing from a family file.
std::vector<TextTable> build_tables(const std::filesystem::path& raw_dir);

std::string render_markdown(const std::vector<TextTable>& tables);
std::string render_latex(const std::vector<TextTable>& tables);

/// Writes tables/tables.md and tables/tables.tex from out_dir/raw.
void write_tables(const std::filesystem::path& out_dir);

// ---------------------------------------------------------------------------
// SVG

struct Series {
    std::string label;
    std::vector<double> values;
};

/// Accuracy per epoch, one polyline per series.
std::string svg_trajectory_overlay(const std::vector<Series>& series, std::string_view title);

/// Bar = mean of each group, dots = the individual values.
std::string svg_ablation_bars(const std::vector<Series>& groups, std::string_view title);

/// Mean line and mean +/- std band per schedule; each series entry holds per-seed trajectories.
struct Band {
    std::string label;
    std::vector<std::vector<double>> runs;
};
std::string svg_norm_bands(const std::vector<Band>& bands, std::string_view title);

std::string svg_confusion(const Matrix& confusion, std::string_view title);

/// Renders every figure whose inputs exist under out_dir/raw; returns the names written.
std::vector<std::string> write_figures(const std::filesystem::path& out_dir);

// ---------------------------------------------------------------------------
// Manifest

struct ManifestEntry {
    std::string path;  // relative, '/'-separated
    std::uintmax_t size = 0;
    std::string sha256;
};

struct Manifest {
    std::string tool_version{kToolVersion};
    std::string config_digest;
    std::string hardware;
    std::string timestamp;  // not part of the run identity
    std::vector<ManifestEntry> entries;
};

/// Every regular file under dir except the manifest itself, sorted by path.
Manifest scan_directory(const std::filesystem::path& dir);

std::string render_manifest(const Manifest& m);
Manifest parse_manifest(std::string_view text);

/// Manifest text with the timestamp line removed.
std::string manifest_identity(std::string_view text);

void write_manifest(const std::filesystem::path& dir, Manifest m);

struct VerifyResult {
    bool ok = true;
    std::vector<std::string> mismatched;  // size or digest differs
    std::vector<std::string> missing;
    std::vector<std::string> unlisted;
};

/// Recomputes digests of every listed file; `dir` defaults to the manifest's directory.
VerifyResult verify_manifest(const std::filesystem::path& manifest_path);

// ---------------------------------------------------------------------------
// Config

/// Applies `key = value` lines ('#' comments, blank lines allowed) to `options`.
/// Unknown keys, duplicate keys and malformed values throw ConfigError naming the line.
void apply_config(std::string_view text, protocol::SuiteOptions& options);

std::vector<std::uint64_t> parse_seed_list(std::string_view text);

// ---------------------------------------------------------------------------
// Suite

struct EmitOptions {
    std::vector<Family> families{std::begin(kFamilies), std::end(kFamilies)};
    bool diagnostics = true;
    bool timing = false;
    std::size_t timing_repeats = 100;
};

struct SuiteResult {
    std::vector<protocol::RunRecord> records;
    std::optional<protocol::DiagnosticsBundle> diagnostics;
    std::optional<protocol::TimingReport> timing;
};

std::vector<protocol::RunRecord> run_family(protocol::Workbench& bench, Family f);

/// Runs the selected parts, writes raw outputs and models, re-renders tables and
/// figures from everything under out_dir/raw, and rewrites the manifest.
SuiteResult run_and_emit(protocol::Workbench& bench, const std::filesystem::path& out_dir,
                         const EmitOptions& options);

/// Tables, figures and manifest from existing raw outputs only.
void refresh_derived(const std::filesystem::path& out_dir, const protocol::SuiteOptions& options);

}  // namespace spikebench::report
