#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "spikebench/data.hpp"
#include "spikebench/detrng.hpp"
#include "spikebench/plasticity.hpp"
#include "spikebench/protocol.hpp"
#include "spikebench/report.hpp"

#ifndef SPIKEBENCH_DEFAULT_DATA_DIR
#define SPIKEBENCH_DEFAULT_DATA_DIR ""
#endif

namespace fs = std::filesystem;
using namespace spikebench;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitVerify = 3;

struct GlobalArgs {
    std::string data_dir;
    std::string out_dir = "results";
    std::string seeds;
    std::string split_seeds;
    std::string config;
    std::size_t jobs = 0;
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

protocol::SuiteOptions build_options(const GlobalArgs& g) {
    protocol::SuiteOptions o;
    if (!g.config.empty()) {
        if (!fs::is_regular_file(g.config)) throw UsageError("config file not found: " + g.config);
        report::apply_config(report::read_file(g.config), o);
    }
    if (!g.seeds.empty()) {
        o.seeds = report::parse_seed_list(g.seeds);
        o.seeds_extended = o.seeds;
    }
    if (!g.split_seeds.empty()) {
        o.robustness_split_seeds = report::parse_seed_list(g.split_seeds);
        o.split_seed = o.robustness_split_seeds.front();
    }
    if (g.jobs > 0) o.jobs = g.jobs;
    return o;
}

fs::path resolve_data_dir(const GlobalArgs& g) {
    if (!g.data_dir.empty()) return g.data_dir;
    if (const char* env = std::getenv("SPIKEBENCH_DATA_DIR"); env != nullptr && *env != '\0') return env;
    return SPIKEBENCH_DEFAULT_DATA_DIR;
}

data::Dataset load_digits_checked(const GlobalArgs& g) {
    const auto dir = resolve_data_dir(g);
    if (dir.empty()) {
        throw data::DataError("no data directory: pass --data-dir or set SPIKEBENCH_DATA_DIR");
    }
    const auto file = data::find_digits_file(dir);
    if (data::check_known_file(file) == data::ChecksumStatus::mismatch) {
        std::cerr << "warning: " << file.string() << " does not match the registered checksum\n";
    }
    return data::load_digits(file);
}

int run_parts(const GlobalArgs& g, const std::vector<report::Family>& families, bool diagnostics,
              bool timing, std::size_t repeats) {
    const auto options = build_options(g);
    bool needs_digits = diagnostics || timing;
    for (auto f : families) needs_digits |= f != report::Family::temporal;
    std::optional<data::Dataset> digits;
    if (needs_digits) digits = load_digits_checked(g);

    protocol::Workbench bench(digits ? &*digits : nullptr, options);
    report::EmitOptions emit;
    emit.families = families;
    emit.diagnostics = diagnostics;
    emit.timing = timing;
    emit.timing_repeats = repeats;
    const auto result = report::run_and_emit(bench, g.out_dir, emit);

    std::cout << "wrote " << result.records.size() << " run records to " << (fs::path(g.out_dir) / "raw").string()
              << "\n";
    if (result.diagnostics) {
        const auto& d = *result.diagnostics;
        std::printf("diagnostics: spikes/sample %.1f (analytic %.1f), proxy saturation low %.2f%% high %.2f%%\n",
                    d.spikes_per_sample.mean, d.expected_spikes_per_sample, d.saturation_low_pct.mean,
                    d.saturation_high_pct.mean);
    }
    if (result.timing) {
        for (const auto& e : result.timing->entries) {
            std::printf("timing: %-10s %-12s %.3f us/sample\n", e.model.c_str(), e.mode.c_str(),
                        e.median_us_per_sample);
        }
    }
    std::cout << "manifest: " << (fs::path(g.out_dir) / report::kManifestName).string() << "\n";
    return 0;
}

int run_verify(const GlobalArgs& g, const std::string& manifest_arg) {
    const fs::path manifest = manifest_arg.empty() ? fs::path(g.out_dir) / report::kManifestName : fs::path(manifest_arg);
    if (!fs::is_regular_file(manifest)) throw data::DataError("manifest not found: " + manifest.string());
    const auto r = report::verify_manifest(manifest);
    for (const auto& p : r.mismatched) std::cout << "MISMATCH " << p << "\n";
    for (const auto& p : r.missing) std::cout << "MISSING  " << p << "\n";
    for (const auto& p : r.unlisted) std::cout << "UNLISTED " << p << "\n";
    std::cout << (r.ok ? "verification passed\n" : "verification FAILED\n");
    return r.ok ? 0 : kExitVerify;
}

// Small feed-forward network: Poisson inputs drive LIF neurons; eligibility is
// accumulated per bin and converted by a reward at the end of each episode.
int run_demo_kernels(std::size_t episodes, std::uint64_t seed) {
    constexpr std::size_t n_pre = 16;
    constexpr std::size_t n_post = 4;
    constexpr std::size_t bins = 200;
    constexpr double input_rate = 0.05;
    constexpr double gain = 3.0;

    plasticity::LifConfig lif;
    plasticity::PlasticityConfig pcfg;
    auto init = detrng::SeedPath{{"demo-kernels", 0}, {"seed", seed}, {"init", 0}}.resolve();
    Matrix w(n_pre, n_post);
    for (auto& v : w.data()) v = 0.3 + 0.4 * init.next_uniform();

    std::printf("episode  reward  post_spikes              mean_w   min_w   max_w\n");
    for (std::size_t ep = 0; ep < episodes; ++ep) {
        auto stream = detrng::SeedPath{{"demo-kernels", 0}, {"seed", seed}, {"episode", ep}}.resolve();
        auto st = plasticity::make_plasticity_state(n_pre, n_post, pcfg);
        std::vector<plasticity::LifState> neurons(n_post);
        std::vector<std::uint8_t> pre(n_pre);
        std::vector<std::uint8_t> post(n_post);
        std::vector<std::size_t> counts(n_post, 0);
        for (std::size_t t = 0; t < bins; ++t) {
            // The first half of the inputs fire at twice the base rate; reward favors neuron 0.
            for (std::size_t i = 0; i < n_pre; ++i) {
                pre[i] = detrng::bernoulli(stream, i < n_pre / 2 ? 2.0 * input_rate : input_rate) ? 1 : 0;
            }
            for (std::size_t j = 0; j < n_post; ++j) {
                double current = 0.0;
                for (std::size_t i = 0; i < n_pre; ++i) current += gain * w(i, j) * pre[i];
                const auto step = plasticity::lif_step(neurons[j], current, lif);
                neurons[j] = step.state;
                post[j] = step.spiked ? 1 : 0;
                counts[j] += post[j];
            }
            plasticity::step_eligibility(st, pre, post);
            plasticity::step_traces(st, pre, post);
        }
        std::size_t best = 0;
        for (std::size_t j = 1; j < n_post; ++j) {
            if (counts[j] > counts[best]) best = j;
        }
        const double reward = best == 0 ? 1.0 : -1.0;
        w = plasticity::apply_reward(w, st, reward);

        double sum = 0.0;
        double lo = w.data()[0];
        double hi = lo;
        for (double v : w.data()) {
            sum += v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        std::string spikes;
        for (auto c : counts) spikes += std::to_string(c) + " ";
        std::printf("%7zu  %+5.1f  %-24s %.4f  %.4f  %.4f\n", ep + 1, reward, spikes.c_str(),
                    sum / static_cast<double>(w.size()), lo, hi);
        if (lo < pcfg.w_min || hi > pcfg.w_max) {
            std::fprintf(stderr, "weights left [w_min, w_max]\n");
            return 1;
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fixed-seed benchmark harness for local-plasticity spiking classifiers"};
    app.require_subcommand(1);
    GlobalArgs g;
    app.add_option("--data-dir", g.data_dir, "Directory with digits.csv or digits.csv.gz (or SPIKEBENCH_DATA_DIR)");
    app.add_option("--out-dir", g.out_dir, "Output directory")->capture_default_str();
    app.add_option("--seeds", g.seeds, "Comma-separated model seeds (replaces both the 5- and 9-seed sets)");
    app.add_option("--split-seeds", g.split_seeds, "Comma-separated split seeds; the first is the primary split");
    app.add_option("--config", g.config, "Config file with key = value lines");
    app.add_option("--jobs", g.jobs, "Parallel runs (default 1)")->check(CLI::PositiveNumber);

    using report::Family;
    struct Part {
        const char* name;
        const char* help;
        std::vector<Family> families;
        bool diagnostics;
    };
    const std::vector<Part> parts{
        {"baselines", "Pixel/rate softmax controls, hybrid readout and competitive proxy", {Family::baselines}, false},
        {"ablations", "One-factor ablation grid", {Family::ablations}, false},
        {"interaction", "Normalization x reward-shaping 2x2", {Family::interaction}, false},
        {"splits", "Default vs norm-off over the robustness split seeds", {Family::splits}, false},
        {"temporal", "Synthetic temporal-order benchmark", {Family::temporal}, false},
        {"diagnostics", "Confusion, F1, spike counts, saturation, margin, parameter counts", {}, true},
    };
    std::vector<CLI::App*> part_cmds;
    for (const auto& p : parts) part_cmds.push_back(app.add_subcommand(p.name, p.help));

    std::size_t repeats = 100;
    auto* timing = app.add_subcommand("timing", "Amortized forward-only and end-to-end inference timing");
    timing->add_option("--repeats", repeats, "Timed repeats (median reported)")->check(CLI::PositiveNumber);

    bool with_timing = false;
    auto* all = app.add_subcommand("all", "Every experiment family plus diagnostics, tables and figures");
    all->add_flag("--with-timing", with_timing, "Also run the timing benchmark (hardware-dependent output)");

    app.add_subcommand("report", "Re-render tables, figures and manifest from existing raw CSVs");

    std::string manifest;
    auto* verify = app.add_subcommand("verify", "Recompute and check manifest digests");
    verify->add_option("manifest", manifest, "Manifest path (default <out-dir>/MANIFEST.txt)");

    std::size_t episodes = 5;
    std::uint64_t demo_seed = 1;
    auto* demo = app.add_subcommand("demo-kernels", "Run LIF + eligibility + reward kernels on a small network");
    demo->add_option("--episodes", episodes, "Reward episodes")->check(CLI::PositiveNumber);
    demo->add_option("--seed", demo_seed, "Stream seed");

    try {
        app.parse(argc, argv);
        for (std::size_t i = 0; i < parts.size(); ++i) {
            if (part_cmds[i]->parsed()) return run_parts(g, parts[i].families, parts[i].diagnostics, false, repeats);
        }
        if (timing->parsed()) return run_parts(g, {}, false, true, repeats);
        if (all->parsed()) {
            return run_parts(g, {std::begin(report::kFamilies), std::end(report::kFamilies)}, true, with_timing,
                             repeats);
        }
        if (app.got_subcommand("report")) {
            report::refresh_derived(g.out_dir, build_options(g));
            std::cout << "tables, figures and manifest refreshed in " << g.out_dir << "\n";
            return 0;
        }
        if (verify->parsed()) return run_verify(g, manifest);
        if (demo->parsed()) return run_demo_kernels(episodes, demo_seed);
        return 0;
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const report::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const data::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const report::ReportError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
}
