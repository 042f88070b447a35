#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "spikebench/stats.hpp"

using namespace spikebench;
using namespace spikebench::stats;

namespace {

double binom(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// Two-sided exact sign test from the binomial tail directly.
double sign_p_reference(int n, int k) {
    const int tail = std::min(k, n - k);
    double s = 0.0;
    for (int i = 0; i <= tail; ++i) s += binom(n, i);
    return std::min(1.0, 2.0 * s / std::pow(2.0, n));
}

struct CiRow {
    double std;
    std::size_t n;
    double reported_ci;
};

}  // namespace

TEST_SUITE("stats") {

TEST_CASE("summarize") {
    const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    const auto s = summarize(v);
    CHECK(s.n == 4);
    CHECK(s.mean == doctest::Approx(2.5));
    CHECK(s.std == doctest::Approx(std::sqrt(5.0 / 3.0)));
    CHECK(s.ci_half == doctest::Approx(1.96 * std::sqrt(5.0 / 3.0) / 2.0));
    CHECK(s.std_defined);

    const auto one = summarize(std::vector<double>{7.0});
    CHECK(one.mean == 7.0);
    CHECK_FALSE(one.std_defined);
    CHECK(one.ci_half == 0.0);

    CHECK_THROWS_AS(summarize(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("reported CI half-widths follow 1.96 std / sqrt(n)") {
    const CiRow rows[] = {
        {0.00, 5, 0.00}, {0.46, 5, 0.41}, {0.68, 5, 0.60}, {4.75, 5, 4.17}, {3.74, 5, 3.28},
        {5.23, 5, 4.58}, {4.64, 5, 4.07}, {6.01, 5, 5.27}, {2.76, 5, 2.42}, {9.55, 5, 8.37},
        {3.14, 5, 2.75}, {7.06, 5, 6.19}, {2.44, 5, 2.14}, {5.77, 9, 3.77}, {5.51, 9, 3.60},
        {1.11, 9, 0.72}, {1.09, 9, 0.71}, {1.49, 9, 0.97}, {0.96, 5, 0.84}, {1.22, 5, 1.07},
    };
    for (const auto& r : rows) {
        CAPTURE(r.std);
        CHECK(std::abs(ci_half_width(r.std, r.n) - r.reported_ci) <= 0.02);
    }
}

TEST_CASE("exact sign test") {
    const std::vector<double> all_pos(9, 1.0);
    const auto t = sign_test_exact(all_pos);
    CHECK(t.p == doctest::Approx(0.00390625).epsilon(1e-12));
    CHECK(t.non_ties == 9);
    CHECK(t.positives == 9);
    CHECK(t.p == doctest::Approx(0.0039).epsilon(0.01));

    CHECK(sign_test_exact(std::vector<double>{1, 1, 1, -1, -1}).p == 1.0);
    CHECK(sign_test_exact(std::vector<double>{1, 1, 1, 1, 1}).p == doctest::Approx(0.0625));

    const std::vector<double> d{0.5, -1.0, 2.0, 3.0, 1.5, 0.2, 0.7, -0.1};
    std::vector<double> neg;
    for (double x : d) neg.push_back(-x);
    CHECK(sign_test_exact(d).p == sign_test_exact(neg).p);
    CHECK(sign_test_exact(d).p == doctest::Approx(sign_p_reference(8, 6)).epsilon(1e-12));

    const auto ties = sign_test_exact(std::vector<double>{0.0, 1.0, 1.0, 0.0, 1.0});
    CHECK(ties.non_ties == 3);
    CHECK(ties.p == doctest::Approx(0.25));
    const auto none = sign_test_exact(std::vector<double>{0.0, 0.0});
    CHECK(none.all_ties);
    CHECK(none.p == 1.0);

    for (int n = 1; n <= 20; ++n) {
        for (int k = 0; k <= n; ++k) {
            std::vector<double> x(static_cast<std::size_t>(n), -1.0);
            for (int i = 0; i < k; ++i) x[static_cast<std::size_t>(i)] = 1.0;
            CHECK(sign_test_exact(x).p == doctest::Approx(sign_p_reference(n, k)).epsilon(1e-12));
        }
    }
}

TEST_CASE("cohens_dz") {
    CHECK(cohens_dz(std::vector<double>{2.0, 4.0, 6.0}) == doctest::Approx(2.0));
    CHECK(cohens_dz(std::vector<double>{-2.0, -4.0, -6.0}) == doctest::Approx(-2.0));
    const std::vector<double> d{0.3, -1.2, 2.5, 0.8, 1.1};
    double m = 0.0;
    for (double x : d) m += x;
    m /= 5.0;
    double ss = 0.0;
    for (double x : d) ss += (x - m) * (x - m);
    CHECK(cohens_dz(d) == doctest::Approx(m / std::sqrt(ss / 4.0)).epsilon(1e-12));
    CHECK_THROWS_AS(cohens_dz(std::vector<double>{1.0}), std::invalid_argument);
    CHECK_THROWS_AS(cohens_dz(std::vector<double>{1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("cliffs_delta") {
    const std::vector<double> a{1, 2, 3};
    const std::vector<double> b{4, 5};
    CHECK(cliffs_delta(b, a) == 1.0);
    CHECK(cliffs_delta(a, b) == -1.0);
    CHECK(cliffs_delta(a, a) == 0.0);
    const std::vector<double> x{1, 3, 5};
    const std::vector<double> y{2, 3, 4};
    // Greater: 3>2, 5>2, 5>3, 5>4. Less: 1<2, 1<3, 1<4, 3<4.
    CHECK(cliffs_delta(x, y) == 0.0);
    const std::vector<double> z{2, 6};
    CHECK(cliffs_delta(z, x) == doctest::Approx((4.0 - 2.0) / 6.0));
    CHECK_THROWS_AS(cliffs_delta(a, std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("paired_compare") {
    const std::vector<double> a{95.0, 93.0, 96.0, 94.0, 95.5};
    const std::vector<double> b{85.0, 90.0, 80.0, 88.0, 86.0};
    const auto r = paired_compare(a, b);
    CHECK(r.n_pairs == 5);
    CHECK(r.n_nonties == 5);
    CHECK(r.mean_diff == doctest::Approx(8.9));
    CHECK(r.sign_p == doctest::Approx(0.0625));
    CHECK(r.cliffs_delta == 1.0);
    const std::vector<double> d{10.0, 3.0, 16.0, 6.0, 9.5};
    CHECK(r.dz == doctest::Approx(cohens_dz(d)));
    CHECK(r.ci_half == doctest::Approx(summarize(d).ci_half));

    const auto flat = paired_compare(std::vector<double>{2, 3}, std::vector<double>{1, 2});
    CHECK(std::isnan(flat.dz));
    CHECK_THROWS_AS(paired_compare(a, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("confusion matrix and macro F1") {
    const std::vector<std::size_t> truth{0, 0, 1, 1, 2, 2};
    const std::vector<std::size_t> pred{0, 1, 1, 1, 2, 0};
    const auto counts = confusion_counts(truth, pred, 3);
    CHECK(counts(0, 0) == 1);
    CHECK(counts(0, 1) == 1);
    CHECK(counts(1, 1) == 2);
    CHECK(counts(2, 0) == 1);
    CHECK(counts(2, 2) == 1);
    const auto norm = confusion_matrix(truth, pred, 3);
    for (std::size_t r = 0; r < 3; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < 3; ++c) s += norm(r, c);
        CHECK(s == doctest::Approx(1.0));
    }
    const auto absent = confusion_matrix(std::vector<std::size_t>{0, 0}, std::vector<std::size_t>{0, 1}, 3);
    CHECK(absent(2, 0) == 0.0);
    CHECK(absent(2, 2) == 0.0);

    // Per-class: p0 = 1/2, r0 = 1/2; p1 = 2/3, r1 = 1; p2 = 1, r2 = 1/2.
    const auto f1 = macro_f1(truth, pred, 3);
    const double f0 = 0.5;
    const double f1c = 2.0 * (2.0 / 3.0) / (2.0 / 3.0 + 1.0);
    const double f2 = 2.0 * 0.5 / 1.5;
    CHECK(f1.per_class[0] == doctest::Approx(f0));
    CHECK(f1.per_class[1] == doctest::Approx(f1c));
    CHECK(f1.per_class[2] == doctest::Approx(f2));
    CHECK(f1.macro == doctest::Approx((f0 + f1c + f2) / 3.0));

    const std::vector<std::size_t> perfect{0, 1, 2};
    CHECK(macro_f1(perfect, perfect, 3).macro == 1.0);
    // Everything predicted as class 0: precision 1/3, recall 1.
    const std::vector<std::size_t> t3{0, 1, 2};
    const std::vector<std::size_t> p3{0, 0, 0};
    CHECK(macro_f1(t3, p3, 3).per_class[0] == doctest::Approx(0.5));
    const std::vector<std::size_t> t4{0, 0, 1, 2};
    const std::vector<std::size_t> p4{0, 0, 2, 1};
    CHECK(macro_f1(t4, p4, 3).macro == doctest::Approx(1.0 / 3.0));
    CHECK_THROWS(macro_f1(t3, std::vector<std::size_t>{0}, 3));
}

}  // TEST_SUITE
