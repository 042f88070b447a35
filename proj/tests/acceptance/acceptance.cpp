// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.
//
// Usage: acceptance [data_dir] [--keep]
// The data directory defaults to $SPIKEBENCH_DATA_DIR.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "spikebench/data.hpp"
#include "spikebench/detrng.hpp"
#include "spikebench/plasticity.hpp"
#include "spikebench/protocol.hpp"
#include "spikebench/report.hpp"
#include "spikebench/stats.hpp"

using namespace spikebench;
namespace fs = std::filesystem;

namespace {

// Tolerances and thresholds.
constexpr double kC1MinOffMean = 92.0;
constexpr double kC1MaxOffStd = 3.0;
constexpr double kC1MinDelta = 5.0;
constexpr double kC1MaxSignP = 0.05;
constexpr double kC1MaxSeconds = 300.0;
constexpr double kC2HybridLo = 78.0, kC2HybridHi = 94.0;
constexpr double kC2ProxyLo = 80.0, kC2ProxyHi = 93.0;
constexpr double kC2MaxGap = 6.0;
constexpr double kC2MinSignP = 0.1;
constexpr double kC3MinDeltaOn = 3.0;
constexpr double kC3MinContrast = 5.0;
constexpr double kC4MinMeanDelta = 5.0;
constexpr double kC5CountLo = 45.0, kC5CountHi = 55.0;
constexpr double kC5MinTimeBin = 75.0;
constexpr double kC5MinGap = 25.0;
constexpr double kC5MaxSeconds = 120.0;
constexpr double kC6MinPixels = 93.0;
constexpr double kC6MinRates = 92.0;
constexpr std::size_t kC7HybridParams = 2570;
constexpr std::size_t kC7ProxyParams = 24672;
constexpr double kC7MaxHighSatPct = 0.1;
constexpr double kC7ReferenceSpikes = 2420.7;
constexpr double kC7SpikeBand = 0.15;
constexpr double kC7AnalyticTolerance = 0.01;
constexpr double kC8SignTolerance = 1e-8;
constexpr double kC8CiTolerance = 0.02;
constexpr double kC8OracleTolerance = 1e-12;
constexpr double kC9Tolerance = 1e-12;
constexpr double kC10MaxSeconds = 1800.0;

struct Outcome {
    bool pass = true;
    std::string detail;
};

std::vector<std::pair<std::string, Outcome>> g_results;

void report_line(int id, const std::string& name, const Outcome& o) {
    std::printf("C%-2d %s  %s: %s\n", id, o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    g_results.emplace_back(name, o);
}

std::string f2(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string f4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Runs `body`, turning exceptions into a failed outcome.
Outcome guarded(const std::function<Outcome()>& body) {
    try {
        return body();
    } catch (const std::exception& e) {
        return {false, std::string("error: ") + e.what()};
    }
}

double mean_of(const std::vector<protocol::RunRecord>& records, const std::string& label) {
    const auto acc = protocol::accuracies(protocol::select(records, label));
    if (acc.empty()) throw std::runtime_error("no records for " + label);
    return stats::summarize(acc).mean;
}

// ---------------------------------------------------------------------------

Outcome c1_normalization(const data::Dataset& digits) {
    const auto t0 = std::chrono::steady_clock::now();
    protocol::Workbench bench(&digits, protocol::SuiteOptions{});
    std::vector<protocol::ExperimentSpec> specs;
    for (const auto& s : bench.ablation_specs()) {
        if (s.label == "norm=on" || s.label == "norm=off") specs.push_back(s);
    }
    const auto recs = bench.run_experiments(specs);
    const double secs = seconds_since(t0);

    const auto on = protocol::select(recs, "norm=on");
    const auto off = protocol::select(recs, "norm=off");
    const auto off_s = stats::summarize(protocol::accuracies(off));
    const auto cmp = stats::paired_compare(protocol::accuracies(off), protocol::accuracies(on));
    std::size_t positive = 0;
    for (std::size_t i = 0; i < off.size(); ++i) positive += off[i].accuracy_pct > on[i].accuracy_pct ? 1 : 0;

    Outcome o;
    o.pass = off.size() == 9 && off_s.mean >= kC1MinOffMean && off_s.std <= kC1MaxOffStd &&
             cmp.mean_diff >= kC1MinDelta && positive == off.size() && cmp.sign_p <= kC1MaxSignP &&
             secs <= kC1MaxSeconds;
    o.detail = "norm-off " + f2(off_s.mean) + " ± " + f2(off_s.std) + " (n=" + std::to_string(off.size()) +
               "), Δ off−on " + f2(cmp.mean_diff) + " pp, positive seeds " + std::to_string(positive) + "/" +
               std::to_string(off.size()) + ", sign p " + f4(cmp.sign_p) + ", " + f2(secs) + " s";
    return o;
}

Outcome c2_baselines(const std::vector<protocol::RunRecord>& recs) {
    const auto hybrid = protocol::select(recs, "hybrid");
    const auto proxy = protocol::select(recs, "stdp-proxy");
    const double h = stats::summarize(protocol::accuracies(hybrid)).mean;
    const double p = stats::summarize(protocol::accuracies(proxy)).mean;
    const auto cmp = stats::paired_compare(protocol::accuracies(hybrid), protocol::accuracies(proxy));
    Outcome o;
    o.pass = h >= kC2HybridLo && h <= kC2HybridHi && p >= kC2ProxyLo && p <= kC2ProxyHi &&
             std::abs(cmp.mean_diff) <= kC2MaxGap && cmp.sign_p > kC2MinSignP;
    o.detail = "hybrid " + f2(h) + ", proxy " + f2(p) + ", mean diff " + f2(cmp.mean_diff) + " pp, sign p " +
               f4(cmp.sign_p) + " (" + std::to_string(cmp.n_nonties) + " non-tied pairs)";
    return o;
}

Outcome c3_interaction(const std::vector<protocol::RunRecord>& recs) {
    const auto d = protocol::interaction_deltas(recs);
    Outcome o;
    o.pass = d.delta_norm_on >= kC3MinDeltaOn && d.contrast() >= kC3MinContrast;
    o.detail = "Δ(on) " + f2(d.delta_norm_on) + " pp, Δ(off) " + f2(d.delta_norm_off) + " pp, contrast " +
               f2(d.contrast()) + " pp";
    return o;
}

Outcome c4_splits(const std::vector<protocol::RunRecord>& recs) {
    const auto s = protocol::summarize_splits(recs);
    Outcome o;
    o.pass = s.rows.size() == 3 && s.positive_splits == 3 && s.across_delta.mean >= kC4MinMeanDelta;
    o.detail = "Δ per split";
    for (const auto& r : s.rows) o.detail += " " + std::to_string(r.split_seed) + ":" + f2(r.delta);
    o.detail += ", positive " + std::to_string(s.positive_splits) + "/" + std::to_string(s.rows.size()) +
                ", mean Δ " + f2(s.across_delta.mean) + " pp";
    return o;
}

Outcome c5_temporal() {
    const auto t0 = std::chrono::steady_clock::now();
    protocol::Workbench bench(nullptr, protocol::SuiteOptions{});
    const auto recs = bench.run_temporal_benchmark();
    const double secs = seconds_since(t0);
    const double count = mean_of(recs, "count");
    const double timebin = mean_of(recs, "time-bin");
    Outcome o;
    o.pass = count >= kC5CountLo && count <= kC5CountHi && timebin >= kC5MinTimeBin &&
             timebin - count >= kC5MinGap && secs <= kC5MaxSeconds;
    o.detail = "count " + f2(count) + ", time-bin " + f2(timebin) + ", gap " + f2(timebin - count) + " pp, " +
               f2(secs) + " s";
    return o;
}

Outcome c6_controls(const std::vector<protocol::RunRecord>& recs) {
    const double px = mean_of(recs, "logreg-pixels");
    const double rt = mean_of(recs, "logreg-rates");
    Outcome o;
    o.pass = px >= kC6MinPixels && rt >= kC6MinRates;
    o.detail = "pixel softmax " + f2(px) + ", encoded-rate softmax " + f2(rt);
    return o;
}

Outcome c7_diagnostics(const protocol::DiagnosticsBundle& d) {
    const double spikes = d.spikes_per_sample.mean;
    const double analytic = d.expected_spikes_per_sample;
    const double band = std::abs(spikes - kC7ReferenceSpikes) / kC7ReferenceSpikes;
    const double oracle = std::abs(spikes - analytic) / analytic;
    Outcome o;
    o.pass = d.hybrid_params == kC7HybridParams && d.proxy_params == kC7ProxyParams &&
             d.saturation_high_pct.mean <= kC7MaxHighSatPct && d.saturation_low_pct.mean > 0.0 &&
             band <= kC7SpikeBand && oracle <= kC7AnalyticTolerance;
    o.detail = "params " + std::to_string(d.hybrid_params) + "/" + std::to_string(d.proxy_params) +
               ", saturation low " + f2(d.saturation_low_pct.mean) + "% high " + f2(d.saturation_high_pct.mean) +
               "%, spikes/sample " + f2(spikes) + " (analytic " + f2(analytic) + ", " + f2(100.0 * oracle) +
               "% apart; " + f2(100.0 * band) + "% from 2420.7)";
    return o;
}

// ---------------------------------------------------------------------------

double cliffs_oracle(const std::vector<double>& a, const std::vector<double>& b) {
    long gt = 0, lt = 0;
    for (double x : a) {
        for (double y : b) {
            gt += x > y;
            lt += x < y;
        }
    }
    return static_cast<double>(gt - lt) / static_cast<double>(a.size() * b.size());
}

double dz_oracle(const std::vector<double>& d) {
    double m = 0.0;
    for (double x : d) m += x;
    m /= static_cast<double>(d.size());
    double ss = 0.0;
    for (double x : d) ss += (x - m) * (x - m);
    return m / std::sqrt(ss / static_cast<double>(d.size() - 1));
}

Outcome c8_statistics() {
    Outcome o;
    const std::vector<double> nine(9, 1.0);
    const double p9 = stats::sign_test_exact(nine).p;
    const bool sign_ok = std::abs(p9 - 0.00390625) <= kC8SignTolerance;

    struct Row {
        double std;
        std::size_t n;
        double ci;
    };
    const Row rows[] = {
        {0.00, 5, 0.00}, {0.46, 5, 0.41}, {0.68, 5, 0.60}, {4.75, 5, 4.17}, {3.74, 5, 3.28},
        {5.23, 5, 4.58}, {4.64, 5, 4.07}, {6.01, 5, 5.27}, {2.76, 5, 2.42}, {9.55, 5, 8.37},
        {3.14, 5, 2.75}, {7.06, 5, 6.19}, {2.44, 5, 2.14}, {5.77, 9, 3.77}, {5.51, 9, 3.60},
        {1.11, 9, 0.72}, {1.09, 9, 0.71}, {0.96, 5, 0.84}, {1.22, 5, 1.07},
    };
    double ci_worst = 0.0;
    for (const auto& r : rows) ci_worst = std::max(ci_worst, std::abs(stats::ci_half_width(r.std, r.n) - r.ci));

    detrng::StreamState s{8};
    double oracle_worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t na = 2 + static_cast<std::size_t>(s.next_uniform() * 12);
        const std::size_t nb = 1 + static_cast<std::size_t>(s.next_uniform() * 12);
        std::vector<double> a(na), b(nb);
        for (auto& v : a) v = std::round(s.next_uniform() * 20.0) / 4.0;
        for (auto& v : b) v = std::round(s.next_uniform() * 20.0) / 4.0;
        oracle_worst = std::max(oracle_worst, std::abs(stats::cliffs_delta(a, b) - cliffs_oracle(a, b)));
        for (auto& v : a) v += s.next_uniform();
        oracle_worst = std::max(oracle_worst, std::abs(stats::cohens_dz(a) - dz_oracle(a)));
    }
    o.pass = sign_ok && ci_worst <= kC8CiTolerance && oracle_worst <= kC8OracleTolerance;
    char buf[160];
    std::snprintf(buf, sizeof buf, "sign p(9/9) %.8f, worst CI deviation %.4f over %zu rows, worst oracle error %.1e",
                  p9, ci_worst, std::size(rows), oracle_worst);
    o.detail = buf;
    return o;
}

Outcome c9_kernels() {
    using namespace plasticity;
    constexpr std::size_t n_pre = 8, n_post = 4, steps = 200;
    constexpr double gain = 4.0;
    LifConfig lif;
    PlasticityConfig pc;
    auto st = make_plasticity_state(n_pre, n_post, pc);
    std::vector<LifState> neurons(n_post);
    detrng::StreamState s{99};
    Matrix w(n_pre, n_post);
    for (auto& v : w.data()) v = s.next_uniform();

    // Naive reference state.
    const double alpha = std::exp(-lif.dt / lif.tau_m), beta = std::exp(-pc.dt / pc.tau_pre);
    const double gamma = std::exp(-pc.dt / pc.tau_post), delta = std::exp(-pc.dt / pc.tau_elig);
    std::vector<double> v(n_post, 0.0), xh(n_pre, 0.0), yh(n_post, 0.0);
    std::vector<std::uint32_t> rc(n_post, 0);
    std::vector<double> e(n_pre * n_post, 0.0), rw(w.data().begin(), w.data().end());

    double worst = 0.0;
    bool bounded = true;
    bool spikes_match = true;
    std::size_t post_spikes = 0;
    for (std::size_t t = 0; t < steps; ++t) {
        std::vector<std::uint8_t> pre(n_pre), post(n_post), ref_post(n_post, 0);
        for (auto& x : pre) x = s.next_uniform() < 0.3 ? 1 : 0;
        for (std::size_t j = 0; j < n_post; ++j) {
            double I = 0.0, rI = 0.0;
            for (std::size_t i = 0; i < n_pre; ++i) {
                I += gain * w(i, j) * pre[i];
                rI += gain * rw[i * n_post + j] * pre[i];
            }
            const auto r = lif_step(neurons[j], I, lif);
            neurons[j] = r.state;
            post[j] = r.spiked ? 1 : 0;
            post_spikes += post[j];
            if (rc[j] > 0) {
                v[j] = lif.v_reset;
                --rc[j];
            } else {
                v[j] = alpha * v[j] + (1.0 - alpha) * rI + lif.i0;
                if (v[j] >= lif.v_theta) {
                    ref_post[j] = 1;
                    v[j] = lif.v_reset;
                    rc[j] = lif.refrac_bins;
                }
            }
        }
        spikes_match = spikes_match && post == ref_post;
        step_eligibility(st, pre, post);
        step_traces(st, pre, post);
        for (std::size_t i = 0; i < n_pre; ++i) {
            for (std::size_t j = 0; j < n_post; ++j) {
                e[i * n_post + j] = delta * e[i * n_post + j] + pc.a_plus * xh[i] * ref_post[j] -
                                    pc.a_minus * pre[i] * yh[j];
            }
        }
        for (std::size_t i = 0; i < n_pre; ++i) xh[i] = beta * xh[i] + pre[i];
        for (std::size_t j = 0; j < n_post; ++j) yh[j] = gamma * yh[j] + ref_post[j];
        if (t % 40 == 39) {
            const double R = (t / 40) % 2 == 0 ? 1.5 : -1.0;
            w = apply_reward(w, st, R);
            for (std::size_t k = 0; k < rw.size(); ++k) {
                rw[k] = std::min(pc.w_max, std::max(pc.w_min, rw[k] + pc.eta * R * e[k]));
            }
        }
        for (std::size_t j = 0; j < n_post; ++j) {
            worst = std::max({worst, std::abs(neurons[j].v - v[j]), std::abs(st.post_traces[j] - yh[j])});
        }
        for (std::size_t i = 0; i < n_pre; ++i) {
            worst = std::max(worst, std::abs(st.pre_traces[i] - xh[i]));
            for (std::size_t j = 0; j < n_post; ++j) {
                worst = std::max({worst, std::abs(st.eligibility(i, j) - e[i * n_post + j]),
                                  std::abs(w(i, j) - rw[i * n_post + j])});
                bounded = bounded && w(i, j) >= pc.w_min && w(i, j) <= pc.w_max;
            }
        }
    }

    // beta^t closed form for a single spike.
    auto single = make_plasticity_state(1, 1, pc);
    const std::vector<std::uint8_t> on{1}, off{0};
    step_traces(single, on, off);
    double closed_worst = 0.0;
    for (int t = 1; t <= 200; ++t) {
        closed_worst = std::max(closed_worst, std::abs(single.pre_traces[0] - std::pow(single.beta, t - 1)));
        step_traces(single, off, off);
    }

    Outcome o;
    o.pass = spikes_match && bounded && post_spikes > 0 && worst <= kC9Tolerance && closed_worst <= kC9Tolerance;
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "%zu steps, %zu post spikes, spike trains %s, worst state error %.1e, weights %s, closed-form error %.1e",
                  steps, post_spikes, spikes_match ? "match" : "differ", worst, bounded ? "bounded" : "OUT OF BOUNDS",
                  closed_worst);
    o.detail = buf;
    return o;
}

// ---------------------------------------------------------------------------

std::vector<fs::path> outputs_to_compare(const fs::path& dir) {
    std::vector<fs::path> out;
    for (const auto& sub : {"raw", "figures"}) {
        if (!fs::exists(dir / sub)) continue;
        for (const auto& e : fs::directory_iterator(dir / sub)) {
            const auto ext = e.path().extension();
            if (ext == ".csv" || ext == ".svg") out.push_back(fs::relative(e.path(), dir));
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

Outcome c10_reproducibility(const data::Dataset& digits, const fs::path& dir1, const fs::path& dir2,
                            double first_run_seconds) {
    protocol::SuiteOptions second;
    second.jobs = 2;
    protocol::Workbench bench(&digits, second);
    report::run_and_emit(bench, dir2, report::EmitOptions{});

    const auto files1 = outputs_to_compare(dir1);
    const auto files2 = outputs_to_compare(dir2);
    std::vector<std::string> differing;
    for (const auto& f : files1) {
        if (!fs::exists(dir2 / f) || report::read_file(dir1 / f) != report::read_file(dir2 / f)) {
            differing.push_back(f.string());
        }
    }
    const auto m1 = report::read_file(dir1 / std::string(report::kManifestName));
    const auto m2 = report::read_file(dir2 / std::string(report::kManifestName));
    const bool identity = report::manifest_identity(m1) == report::manifest_identity(m2);
    const bool v1 = report::verify_manifest(dir1 / std::string(report::kManifestName)).ok;
    const bool v2 = report::verify_manifest(dir2 / std::string(report::kManifestName)).ok;

    Outcome o;
    o.pass = files1 == files2 && !files1.empty() && differing.empty() && identity && v1 && v2 &&
             first_run_seconds <= kC10MaxSeconds;
    o.detail = std::to_string(files1.size()) + " CSV/SVG files, " + std::to_string(differing.size()) +
               " differing, manifest identity " + (identity ? "equal" : "DIFFERENT") + ", verify " +
               (v1 && v2 ? "ok" : "FAILED") + ", full suite " + f2(first_run_seconds) + " s";
    for (const auto& d : differing) o.detail += " [" + d + "]";
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    std::string data_dir;
    bool keep = false;
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--keep") keep = true;
        else data_dir = a;
    }
    if (data_dir.empty()) {
        if (const char* env = std::getenv("SPIKEBENCH_DATA_DIR")) data_dir = env;
    }
    if (data_dir.empty()) {
        std::fprintf(stderr, "acceptance: no data directory (pass one or set SPIKEBENCH_DATA_DIR)\n");
        return 2;
    }

    data::Dataset digits;
    try {
        digits = data::load_digits(data::find_digits_file(data_dir));
    } catch (const std::exception& e) {
        std::fprintf(stderr, "acceptance: %s\n", e.what());
        return 2;
    }

    const fs::path work = fs::temp_directory_path() / "spikebench_acceptance";
    fs::remove_all(work);
    const fs::path dir1 = work / "run1";
    const fs::path dir2 = work / "run2";

    std::printf("full suite run 1 -> %s\n", dir1.string().c_str());
    std::fflush(stdout);
    const auto t0 = std::chrono::steady_clock::now();
    report::SuiteResult suite;
    std::string suite_error;
    try {
        protocol::Workbench bench(&digits, protocol::SuiteOptions{});
        suite = report::run_and_emit(bench, dir1, report::EmitOptions{});
    } catch (const std::exception& e) {
        suite_error = e.what();
    }
    const double suite_seconds = seconds_since(t0);
    std::printf("full suite run 1 finished in %.1f s\n\n", suite_seconds);

    auto needs_suite = [&](const std::function<Outcome()>& body) {
        if (!suite_error.empty()) return Outcome{false, "suite failed: " + suite_error};
        return guarded(body);
    };
    const auto& recs = suite.records;

    report_line(1, "normalization dominance", guarded([&] { return c1_normalization(digits); }));
    report_line(2, "baseline ranges", needs_suite([&] { return c2_baselines(recs); }));
    report_line(3, "interaction reversal", needs_suite([&] { return c3_interaction(recs); }));
    report_line(4, "split robustness", needs_suite([&] { return c4_splits(recs); }));
    report_line(5, "temporal benchmark", guarded([] { return c5_temporal(); }));
    report_line(6, "controls", needs_suite([&] { return c6_controls(recs); }));
    report_line(7, "diagnostics", needs_suite([&] {
        if (!suite.diagnostics) return Outcome{false, "no diagnostics"};
        return c7_diagnostics(*suite.diagnostics);
    }));
    report_line(8, "statistics exactness", guarded([] { return c8_statistics(); }));
    report_line(9, "kernel correctness", guarded([] { return c9_kernels(); }));
    report_line(10, "reproducibility", needs_suite([&] {
        return c10_reproducibility(digits, dir1, dir2, suite_seconds);
    }));

    const auto failed = std::count_if(g_results.begin(), g_results.end(), [](const auto& r) { return !r.second.pass; });
    std::printf("\n%zu/%zu criteria passed\n", g_results.size() - static_cast<std::size_t>(failed), g_results.size());
    if (keep) std::printf("outputs kept in %s\n", work.string().c_str());
    else fs::remove_all(work);
    return failed == 0 ? 0 : 1;
}
