#pragma once

// Experiment orchestration under the fixed-seed contract.
//
// Stream roots are shared per branch ("digits-hybrid", "digits-proxy", ...), not
// per experiment row, so two rows with the same configuration produce identical
// records and rows that differ in one factor see the same random draws.

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spikebench/data.hpp"
#include "spikebench/encoding.hpp"
#include "spikebench/learners.hpp"
#include "spikebench/matrix.hpp"
#include "spikebench/stats.hpp"

namespace spikebench::protocol {

enum class Branch { hybrid, proxy, logreg_pixels, logreg_rates, temporal_count, temporal_timebin };

std::string_view to_string(Branch b) noexcept;

/// Root label of the random streams used by a branch.
std::string_view stream_label(Branch b) noexcept;

struct LearnerConfig {
    Branch branch = Branch::hybrid;
    encoding::EncoderConfig encoder;
    learners::HybridConfig hybrid;
    learners::ProxyConfig proxy;
    learners::SoftmaxBaselineConfig softmax;
    data::TemporalConfig temporal;
    std::size_t temporal_windows = 10;

    /// `key = value` lines for every field that affects results.
    std::string canonical() const;
};

inline const std::vector<std::uint64_t> kModelSeeds{11, 23, 37, 41, 53};
inline const std::vector<std::uint64_t> kModelSeedsExtended{11, 23, 37, 41, 53, 67, 79, 83, 97};
inline constexpr std::uint64_t kPrimarySplitSeed = 2026;
inline const std::vector<std::uint64_t> kRobustnessSplitSeeds{2026, 2027, 2028};
inline constexpr std::uint64_t kRepresentativeSeed = 23;

struct ExperimentSpec {
    std::string label;
    std::vector<std::uint64_t> split_seeds{kPrimarySplitSeed};
    std::vector<std::uint64_t> model_seeds = kModelSeeds;
    LearnerConfig learner;
};

struct RunRecord {
    std::string experiment;
    Branch branch = Branch::hybrid;
    std::uint64_t split_seed = 0;
    std::uint64_t model_seed = 0;
    double accuracy_pct = 0.0;
    double macro_f1 = 0.0;
    std::vector<double> per_class_f1;
    double spikes_per_sample = 0.0;    // mean over test encodings; 0 for pixel inputs
    double expected_spikes = 0.0;      // analytic mean over the same samples
    std::size_t epochs = 0;
    std::size_t param_count = 0;
    double saturation_low_pct = 0.0;   // proxy only
    double saturation_high_pct = 0.0;  // proxy only
    double winner_margin = 0.0;        // proxy only

    learners::TrainTrajectory trajectory;
    std::vector<std::size_t> test_labels;
    std::vector<std::size_t> predictions;
    std::shared_ptr<const learners::ReadoutModel> readout;
    std::shared_ptr<const learners::ProxyModel> proxy;
};

/// Numeric fields equal (labels and model pointers ignored).
bool same_result(const RunRecord& a, const RunRecord& b);

/// Default configuration and seed sets for a suite.
struct SuiteOptions {
    LearnerConfig base;  // branch ignored; hybrid defaults
    std::vector<std::uint64_t> seeds = kModelSeeds;
    std::vector<std::uint64_t> seeds_extended = kModelSeedsExtended;
    std::uint64_t split_seed = kPrimarySplitSeed;
    std::vector<std::uint64_t> robustness_split_seeds = kRobustnessSplitSeeds;
    std::size_t jobs = 1;

    /// Base configuration plus seed sets, for manifests.
    std::string canonical() const;
};

/// Runs experiments, memoizing results per (branch, config, split seed, model seed).
/// Thread-safe; results do not depend on `jobs`.
class Workbench {
public:
    /// `digits` may be null for temporal-only use.
    Workbench(const data::Dataset* digits, SuiteOptions options);

    const SuiteOptions& options() const noexcept { return options_; }
    const data::Dataset& digits() const;

    std::vector<RunRecord> run_experiment(const ExperimentSpec& spec);
    /// All specs, in order, with independent runs spread over `jobs` workers.
    std::vector<RunRecord> run_experiments(const std::vector<ExperimentSpec>& specs);

    std::vector<RunRecord> run_baselines();
    std::vector<RunRecord> run_ablation_grid();
    std::vector<RunRecord> run_interaction_2x2();
    std::vector<RunRecord> run_split_robustness();
    std::vector<RunRecord> run_temporal_benchmark();

    std::vector<ExperimentSpec> baseline_specs() const;
    std::vector<ExperimentSpec> ablation_specs() const;
    std::vector<ExperimentSpec> interaction_specs() const;
    std::vector<ExperimentSpec> split_specs() const;
    std::vector<ExperimentSpec> temporal_specs() const;

    const data::SplitIndices& split(std::uint64_t split_seed);
    const data::TemporalDataset& temporal_dataset(std::uint64_t split_seed,
                                                  const data::TemporalConfig& cfg);

    /// Single (config, split, seed) run, from cache when available.
    RunRecord run_one(const LearnerConfig& cfg, std::uint64_t split_seed, std::uint64_t model_seed);

    std::size_t cached_runs() const;

private:
    RunRecord compute(const LearnerConfig& cfg, std::uint64_t split_seed, std::uint64_t model_seed);
    RunRecord compute_digits(const LearnerConfig& cfg, std::uint64_t split_seed,
                             std::uint64_t model_seed);
    RunRecord compute_temporal(const LearnerConfig& cfg, std::uint64_t split_seed,
                               std::uint64_t model_seed);
    LearnerConfig with_branch(Branch b) const;

    const data::Dataset* digits_;
    SuiteOptions options_;
    mutable std::mutex mutex_;
    std::map<std::string, RunRecord> cache_;
    std::map<std::uint64_t, data::SplitIndices> splits_;
    std::map<std::string, std::shared_ptr<const data::TemporalDataset>> temporal_;
};

/// Records with experiment == label, sorted by (split_seed, model_seed).
std::vector<RunRecord> select(const std::vector<RunRecord>& records, std::string_view label,
                              std::optional<std::uint64_t> split_seed = std::nullopt);

std::vector<double> accuracies(const std::vector<RunRecord>& records);

/// pos-only minus signed mean accuracy under normalization on and off.
struct InteractionDeltas {
    double delta_norm_on = 0.0;
    double delta_norm_off = 0.0;
    double contrast() const noexcept { return delta_norm_on - delta_norm_off; }
};

InteractionDeltas interaction_deltas(const std::vector<RunRecord>& records);

struct SplitRow {
    std::uint64_t split_seed = 0;
    stats::Summary default_acc;
    stats::Summary best_acc;
    double delta = 0.0;
};

struct SplitSummary {
    std::vector<SplitRow> rows;
    stats::Summary across_default;
    stats::Summary across_best;
    stats::Summary across_delta;
    std::size_t positive_splits = 0;
};

SplitSummary summarize_splits(const std::vector<RunRecord>& records);

struct DiagnosticsBundle {
    Matrix confusion;                      // hybrid default, representative seed
    std::uint64_t confusion_seed = 0;
    std::vector<double> per_class_f1_mean;
    stats::Summary spikes_per_sample;
    double expected_spikes_per_sample = 0.0;
    stats::Summary saturation_low_pct;
    stats::Summary saturation_high_pct;
    stats::Summary winner_margin;
    std::size_t hybrid_params = 0;
    std::size_t proxy_params = 0;
    std::shared_ptr<const learners::ReadoutModel> hybrid_model;
    std::shared_ptr<const learners::ProxyModel> proxy_model;
};

/// Needs the "hybrid" and "stdp-proxy" rows of run_baselines().
DiagnosticsBundle run_diagnostics(const std::vector<RunRecord>& baseline_records);

struct TimingEntry {
    std::string model;
    std::string mode;  // forward-only | end-to-end
    double median_us_per_sample = 0.0;
    std::size_t repeats = 0;
    std::size_t batch = 0;
};

struct TimingReport {
    std::string hardware;
    std::vector<TimingEntry> entries;
};

/// Amortized batch timing (t_batch / N, median over `repeats`) for the representative
/// hybrid and proxy models on the full test split.
TimingReport run_timing(Workbench& bench, std::size_t repeats = 100);

std::string hardware_string();

}  // namespace spikebench::protocol
