#pragma once

// Seed-level aggregation and paired statistics.

#include <cstddef>
#include <span>
#include <vector>

#include "spikebench/matrix.hpp"

namespace spikebench::stats {

inline constexpr double kZ95 = 1.96;

struct Summary {
    std::size_t n = 0;
    double mean = 0.0;
    double std = 0.0;      // sample (n-1)
    double ci_half = 0.0;  // 1.96 std / sqrt(n)
    bool std_defined = false;  // false when n == 1
};

/// Throws std::invalid_argument on an empty list.
Summary summarize(std::span<const double> values);

/// 1.96 * std / sqrt(n).
double ci_half_width(double std, std::size_t n);

struct SignTest {
    double p = 1.0;
    std::size_t non_ties = 0;
    std::size_t positives = 0;
    bool all_ties = false;
};

/// Two-sided exact binomial sign test; exact zeros are dropped.
SignTest sign_test_exact(std::span<const double> diffs);

/// mean(d) / std(d). Throws for n < 2 or zero variance.
double cohens_dz(std::span<const double> diffs);

/// (#{a_i > b_j} - #{a_i < b_j}) / (|a| |b|). Throws on empty input.
double cliffs_delta(std::span<const double> a, std::span<const double> b);

struct PairedResult {
    std::size_t n_pairs = 0;
    std::size_t n_nonties = 0;
    double mean_diff = 0.0;
    double sign_p = 1.0;
    double dz = 0.0;        // NaN when the differences have no spread
    double cliffs_delta = 0.0;
    double ci_half = 0.0;
};

/// Seed-matched comparison of `a` against `b` (differences a - b).
PairedResult paired_compare(std::span<const double> a, std::span<const double> b);

/// Row-normalized confusion matrix (rows: true class). Absent classes give zero rows.
Matrix confusion_matrix(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                        std::size_t classes);

/// Raw counts, same layout as confusion_matrix.
Matrix confusion_counts(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                        std::size_t classes);

struct F1Report {
    double macro = 0.0;
    std::vector<double> per_class;
};

F1Report macro_f1(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                  std::size_t classes);

}  // namespace spikebench::stats
