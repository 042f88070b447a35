#include "spikebench/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace spikebench::stats {

namespace {

double mean_of(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(std::span<const double> v, double mean) {
    if (v.size() < 2) return 0.0;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

}  // namespace

double ci_half_width(double std, std::size_t n) {
    if (n == 0) throw std::invalid_argument("ci_half_width: n must be positive");
    return kZ95 * std / std::sqrt(static_cast<double>(n));
}

Summary summarize(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("summarize: empty list");
    // Sorted copy so the result does not depend on input order.
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    Summary s;
    s.n = v.size();
    s.mean = mean_of(v);
    s.std = sample_std(v, s.mean);
    s.std_defined = s.n >= 2;
    s.ci_half = ci_half_width(s.std, s.n);
    return s;
}

SignTest sign_test_exact(std::span<const double> diffs) {
    SignTest t;
    for (double d : diffs) {
        if (d == 0.0) continue;
        ++t.non_ties;
        if (d > 0.0) ++t.positives;
    }
    if (t.non_ties == 0) {
        t.all_ties = true;
        t.p = 1.0;
        return t;
    }
    const std::size_t m = t.non_ties;
    const std::size_t tail_k = std::min(t.positives, m - t.positives);
    double tail = 0.0;
    if (m <= 60) {
        // Integer coefficients keep small-sample p-values exact.
        std::uint64_t c = 1;
        std::uint64_t sum = 0;
        for (std::size_t i = 0; i <= tail_k; ++i) {
            sum += c;
            c = c * (m - i) / (i + 1);
        }
        tail = std::ldexp(static_cast<double>(sum), -static_cast<int>(m));
    } else {
        for (std::size_t i = 0; i <= tail_k; ++i) {
            const double log_c = std::lgamma(static_cast<double>(m) + 1.0) -
                                 std::lgamma(static_cast<double>(i) + 1.0) -
                                 std::lgamma(static_cast<double>(m - i) + 1.0);
            tail += std::exp(log_c - static_cast<double>(m) * std::log(2.0));
        }
    }
    t.p = std::min(1.0, 2.0 * tail);
    return t;
}

double cohens_dz(std::span<const double> diffs) {
    if (diffs.size() < 2) throw std::invalid_argument("cohens_dz: need at least two differences");
    const double m = mean_of(diffs);
    const double s = sample_std(diffs, m);
    if (!(s > 0.0)) throw std::invalid_argument("cohens_dz: differences have zero variance");
    return m / s;
}

double cliffs_delta(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("cliffs_delta: empty input");
    long long balance = 0;
    for (double x : a) {
        for (double y : b) {
            if (x > y) ++balance;
            else if (x < y) --balance;
        }
    }
    return static_cast<double>(balance) / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
}

PairedResult paired_compare(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.empty()) {
        throw std::invalid_argument("paired_compare: need equal-length nonempty samples");
    }
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    PairedResult r;
    r.n_pairs = d.size();
    const auto sign = sign_test_exact(d);
    r.n_nonties = sign.non_ties;
    r.sign_p = sign.p;
    const auto s = summarize(d);
    r.mean_diff = s.mean;
    r.ci_half = s.ci_half;
    r.dz = (s.n >= 2 && s.std > 0.0) ? s.mean / s.std : std::numeric_limits<double>::quiet_NaN();
    r.cliffs_delta = cliffs_delta(a, b);
    return r;
}

Matrix confusion_counts(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                        std::size_t classes) {
    if (truth.size() != predicted.size()) {
        throw std::invalid_argument("confusion: truth and prediction lengths differ");
    }
    Matrix m(classes, classes);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] >= classes || predicted[i] >= classes) {
            throw std::invalid_argument("confusion: label out of range");
        }
        m(truth[i], predicted[i]) += 1.0;
    }
    return m;
}

Matrix confusion_matrix(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                        std::size_t classes) {
    Matrix m = confusion_counts(truth, predicted, classes);
    for (std::size_t r = 0; r < classes; ++r) {
        auto row = m.row(r);
        const double total = std::accumulate(row.begin(), row.end(), 0.0);
        if (total > 0.0) {
            for (auto& v : row) v /= total;
        }
    }
    return m;
}

F1Report macro_f1(std::span<const std::size_t> truth, std::span<const std::size_t> predicted,
                  std::size_t classes) {
    const Matrix m = confusion_counts(truth, predicted, classes);
    F1Report out;
    out.per_class.assign(classes, 0.0);
    for (std::size_t c = 0; c < classes; ++c) {
        double tp = m(c, c);
        double fn = 0.0;
        double fp = 0.0;
        for (std::size_t k = 0; k < classes; ++k) {
            if (k == c) continue;
            fn += m(c, k);
            fp += m(k, c);
        }
        const double denom = 2.0 * tp + fp + fn;
        out.per_class[c] = denom > 0.0 ? 2.0 * tp / denom : 0.0;
    }
    if (classes > 0) {
        out.macro = std::accumulate(out.per_class.begin(), out.per_class.end(), 0.0) /
                    static_cast<double>(classes);
    }
    return out;
}

}  // namespace spikebench::stats
