#include "spikebench/protocol.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <numeric>
#include <set>
#include <stdexcept>
#include <thread>

namespace spikebench::protocol {

std::string_view to_string(Branch b) noexcept {
    switch (b) {
        case Branch::hybrid: return "hybrid";
        case Branch::proxy: return "proxy";
        case Branch::logreg_pixels: return "logreg-pixels";
        case Branch::logreg_rates: return "logreg-rates";
        case Branch::temporal_count: return "temporal-count";
        case Branch::temporal_timebin: return "temporal-timebin";
    }
    return "?";
}

std::string_view stream_label(Branch b) noexcept {
    switch (b) {
        case Branch::hybrid: return "digits-hybrid";
        case Branch::proxy: return "digits-proxy";
        case Branch::logreg_pixels: return "digits-logreg-pixels";
        case Branch::logreg_rates: return "digits-logreg-rates";
        case Branch::temporal_count:
        case Branch::temporal_timebin: return "temporal-synth";
    }
    return "?";
}

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void kv(std::string& out, std::string_view key, const std::string& value) {
    out.append(key);
    out += " = ";
    out += value;
    out += '\n';
}

std::string join_seeds(const std::vector<std::uint64_t>& seeds) {
    std::string out;
    for (auto s : seeds) {
        if (!out.empty()) out += ',';
        out += std::to_string(s);
    }
    return out;
}

detrng::SeedPath run_root(Branch b, std::uint64_t split_seed, std::uint64_t model_seed) {
    return detrng::SeedPath{{std::string(stream_label(b)), 0}, {"split", split_seed}, {"model", model_seed}};
}

std::vector<std::size_t> gather_labels(std::span<const std::size_t> labels,
                                       std::span<const std::size_t> idx) {
    std::vector<std::size_t> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(labels[i]);
    return out;
}

double mean_row_sum(const Matrix& m) {
    if (m.rows() == 0) return 0.0;
    const auto d = m.data();
    return std::accumulate(d.begin(), d.end(), 0.0) / static_cast<double>(m.rows());
}

void fill_scores(RunRecord& rec, std::size_t classes) {
    const auto f1 = stats::macro_f1(rec.test_labels, rec.predictions, classes);
    rec.macro_f1 = f1.macro;
    rec.per_class_f1 = f1.per_class;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < rec.test_labels.size(); ++i) {
        if (rec.predictions[i] == rec.test_labels[i]) ++correct;
    }
    rec.accuracy_pct = rec.test_labels.empty()
                           ? 0.0
                           : 100.0 * static_cast<double>(correct) / static_cast<double>(rec.test_labels.size());
}

template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    for (std::size_t w = 0; w < jobs; ++w) {
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        });
    }
    for (auto& t : workers) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace

std::string LearnerConfig::canonical() const {
    std::string out;
    kv(out, "branch", std::string(to_string(branch)));
    kv(out, "k", std::to_string(encoder.neurons_per_feature));
    kv(out, "sigma", num(encoder.sigma));
    kv(out, "lambda_max", num(encoder.lambda_max));
    kv(out, "dt", num(encoder.dt));
    kv(out, "window_bins", std::to_string(encoder.window_bins));
    kv(out, "hybrid_epochs", std::to_string(hybrid.epochs));
    kv(out, "lr", num(hybrid.lr));
    kv(out, "shaping", std::string(learners::to_string(hybrid.shaping)));
    kv(out, "norm", std::string(learners::to_string(hybrid.schedule.mode)));
    kv(out, "norm_scale", num(hybrid.schedule.scale));
    kv(out, "norm_interval", std::to_string(hybrid.schedule.interval));
    kv(out, "proxy_neurons", std::to_string(proxy.neurons));
    kv(out, "proxy_epochs", std::to_string(proxy.epochs));
    kv(out, "eta_plus", num(proxy.eta_plus));
    kv(out, "eta_minus", num(proxy.eta_minus));
    kv(out, "proxy_w_min", num(proxy.w_min));
    kv(out, "proxy_w_max", num(proxy.w_max));
    kv(out, "delta_theta", num(proxy.delta_theta));
    kv(out, "rho", num(proxy.rho));
    kv(out, "proxy_shaping", std::string(learners::to_string(proxy.shaping)));
    kv(out, "softmax_epochs", std::to_string(softmax.epochs));
    kv(out, "softmax_lr", num(softmax.lr));
    kv(out, "temporal_channels", std::to_string(temporal.channels));
    kv(out, "temporal_bins", std::to_string(temporal.bins));
    kv(out, "temporal_burst_len", std::to_string(temporal.burst_len));
    kv(out, "temporal_burst_rate", num(temporal.burst_rate));
    kv(out, "temporal_background_rate", num(temporal.background_rate));
    kv(out, "temporal_min_gap", std::to_string(temporal.min_gap));
    kv(out, "temporal_samples", std::to_string(temporal.samples));
    kv(out, "temporal_windows", std::to_string(temporal_windows));
    return out;
}

std::string SuiteOptions::canonical() const {
    LearnerConfig b = base;
    b.branch = Branch::hybrid;
    std::string out = b.canonical();
    kv(out, "seeds", join_seeds(seeds));
    kv(out, "seeds_extended", join_seeds(seeds_extended));
    kv(out, "split_seed", std::to_string(split_seed));
    kv(out, "split_seeds", join_seeds(robustness_split_seeds));
    return out;
}

bool same_result(const RunRecord& a, const RunRecord& b) {
    return a.branch == b.branch && a.split_seed == b.split_seed && a.model_seed == b.model_seed &&
           a.accuracy_pct == b.accuracy_pct && a.macro_f1 == b.macro_f1 &&
           a.per_class_f1 == b.per_class_f1 && a.spikes_per_sample == b.spikes_per_sample &&
           a.expected_spikes == b.expected_spikes && a.epochs == b.epochs &&
           a.param_count == b.param_count && a.saturation_low_pct == b.saturation_low_pct &&
           a.saturation_high_pct == b.saturation_high_pct && a.winner_margin == b.winner_margin &&
           a.trajectory.test_accuracy_pct == b.trajectory.test_accuracy_pct &&
           a.trajectory.mean_row_norm == b.trajectory.mean_row_norm &&
           a.predictions == b.predictions && a.test_labels == b.test_labels;
}

// ---------------------------------------------------------------------------

Workbench::Workbench(const data::Dataset* digits, SuiteOptions options)
    : digits_(digits), options_(std::move(options)) {
    options_.base.encoder.validate();
    if (options_.seeds.empty() || options_.seeds_extended.empty()) {
        throw std::invalid_argument("seed sets must be nonempty");
    }
}

const data::Dataset& Workbench::digits() const {
    if (digits_ == nullptr) throw data::DataError("digits dataset not loaded");
    return *digits_;
}

std::size_t Workbench::cached_runs() const {
    std::lock_guard lock(mutex_);
    return cache_.size();
}

const data::SplitIndices& Workbench::split(std::uint64_t split_seed) {
    {
        std::lock_guard lock(mutex_);
        if (auto it = splits_.find(split_seed); it != splits_.end()) return it->second;
    }
    auto s = data::stratified_split(digits(), split_seed);
    std::lock_guard lock(mutex_);
    return splits_.try_emplace(split_seed, std::move(s)).first->second;
}

const data::TemporalDataset& Workbench::temporal_dataset(std::uint64_t split_seed,
                                                         const data::TemporalConfig& cfg) {
    LearnerConfig probe;
    probe.temporal = cfg;
    const std::string key = std::to_string(split_seed) + "\n" + probe.canonical();
    {
        std::lock_guard lock(mutex_);
        if (auto it = temporal_.find(key); it != temporal_.end()) return *it->second;
    }
    auto stream = detrng::SeedPath{{"temporal-synth", 0}, {"split", split_seed}, {"generate", 0}}.resolve();
    auto ds = std::make_shared<const data::TemporalDataset>(data::gen_temporal(cfg, stream));
    std::lock_guard lock(mutex_);
    return *temporal_.try_emplace(key, std::move(ds)).first->second;
}

LearnerConfig Workbench::with_branch(Branch b) const {
    LearnerConfig cfg = options_.base;
    cfg.branch = b;
    return cfg;
}

RunRecord Workbench::run_one(const LearnerConfig& cfg, std::uint64_t split_seed,
                             std::uint64_t model_seed) {
    const std::string key =
        cfg.canonical() + "split = " + std::to_string(split_seed) + "\nmodel = " + std::to_string(model_seed);
    {
        std::lock_guard lock(mutex_);
        if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    }
    RunRecord rec = compute(cfg, split_seed, model_seed);
    std::lock_guard lock(mutex_);
    return cache_.try_emplace(key, std::move(rec)).first->second;
}

RunRecord Workbench::compute(const LearnerConfig& cfg, std::uint64_t split_seed,
                             std::uint64_t model_seed) {
    if (cfg.branch == Branch::temporal_count || cfg.branch == Branch::temporal_timebin) {
        return compute_temporal(cfg, split_seed, model_seed);
    }
    return compute_digits(cfg, split_seed, model_seed);
}

RunRecord Workbench::compute_digits(const LearnerConfig& cfg, std::uint64_t split_seed,
                                    std::uint64_t model_seed) {
    const auto& ds = digits();
    const auto& sp = split(split_seed);
    const auto root = run_root(cfg.branch, split_seed, model_seed);

    RunRecord rec;
    rec.branch = cfg.branch;
    rec.split_seed = split_seed;
    rec.model_seed = model_seed;
    rec.test_labels = gather_labels(ds.labels, sp.test);

    auto expected_mean = [&] {
        double total = 0.0;
        for (auto i : sp.test) total += encoding::expected_spike_count(ds.sample(i), cfg.encoder);
        return total / static_cast<double>(sp.test.size());
    };

    switch (cfg.branch) {
        case Branch::hybrid: {
            learners::EncodedSource source(ds, cfg.encoder, root);
            const Matrix eval = learners::eval_matrix(source, sp.test);
            learners::TrainTask task{ds.labels, ds.class_count, sp.train, &eval, rec.test_labels, root};
            auto result = learners::train_hybrid(source, task, cfg.hybrid);
            for (std::size_t i = 0; i < eval.rows(); ++i) {
                rec.predictions.push_back(learners::readout_predict(result.model, eval.row(i)));
            }
            rec.spikes_per_sample = mean_row_sum(eval);
            rec.expected_spikes = expected_mean();
            rec.epochs = cfg.hybrid.epochs;
            rec.param_count = result.model.parameter_count();
            rec.trajectory = std::move(result.trajectory);
            rec.readout = std::make_shared<const learners::ReadoutModel>(std::move(result.model));
            break;
        }
        case Branch::proxy: {
            learners::EncodedSource source(ds, cfg.encoder, root);
            const Matrix eval = learners::eval_matrix(source, sp.test);
            learners::TrainTask task{ds.labels, ds.class_count, sp.train, nullptr, {}, root};
            auto model = learners::proxy_fit(source, task, cfg.proxy);
            double margin = 0.0;
            for (std::size_t i = 0; i < eval.rows(); ++i) {
                margin += learners::compete(learners::proxy_score(model, eval.row(i))).margin;
                rec.predictions.push_back(learners::proxy_predict(model, eval.row(i)));
            }
            rec.winner_margin = margin / static_cast<double>(eval.rows());
            const auto [low, high] = learners::proxy_saturation(model);
            rec.saturation_low_pct = 100.0 * low;
            rec.saturation_high_pct = 100.0 * high;
            rec.spikes_per_sample = mean_row_sum(eval);
            rec.expected_spikes = expected_mean();
            rec.epochs = cfg.proxy.epochs;
            rec.param_count = model.parameter_count();
            rec.proxy = std::make_shared<const learners::ProxyModel>(std::move(model));
            break;
        }
        case Branch::logreg_pixels:
        case Branch::logreg_rates: {
            Matrix features;
            Matrix eval;
            bool spiking = false;
            if (cfg.branch == Branch::logreg_pixels) {
                features = ds.features;
                eval = Matrix(sp.test.size(), ds.feature_count());
                for (std::size_t i = 0; i < sp.test.size(); ++i) {
                    const auto row = ds.sample(sp.test[i]);
                    std::copy(row.begin(), row.end(), eval.row(i).begin());
                }
            } else {
                // One fixed training encoding per sample; no per-epoch redraw.
                learners::EncodedSource encoded(ds, cfg.encoder, root, /*static_train=*/true);
                features = Matrix(ds.size(), encoded.dimension());
                for (auto i : sp.train) {
                    const auto f = encoded.train_features(i, 0);
                    std::copy(f.begin(), f.end(), features.row(i).begin());
                }
                eval = learners::eval_matrix(encoded, sp.test);
                spiking = true;
                rec.expected_spikes = expected_mean();
            }
            learners::StaticSource source(std::move(features), spiking);
            learners::TrainTask task{ds.labels, ds.class_count, sp.train, nullptr, {}, root};
            auto model = learners::train_softmax_baseline(source, task, cfg.softmax);
            for (std::size_t i = 0; i < eval.rows(); ++i) {
                rec.predictions.push_back(learners::readout_predict(model, eval.row(i)));
            }
            rec.spikes_per_sample = spiking ? mean_row_sum(eval) : 0.0;
            rec.epochs = cfg.softmax.epochs;
            rec.param_count = model.parameter_count();
            rec.readout = std::make_shared<const learners::ReadoutModel>(std::move(model));
            break;
        }
        default:
            throw std::logic_error("compute_digits: temporal branch");
    }
    fill_scores(rec, ds.class_count);
    return rec;
}

RunRecord Workbench::compute_temporal(const LearnerConfig& cfg, std::uint64_t split_seed,
                                      std::uint64_t model_seed) {
    const auto& tds = temporal_dataset(split_seed, cfg.temporal);
    const auto sp = data::stratified_split(tds.labels, tds.class_count, split_seed);
    const auto root = run_root(cfg.branch, split_seed, model_seed);
    const std::size_t windows = cfg.branch == Branch::temporal_count ? 1 : cfg.temporal_windows;

    RunRecord rec;
    rec.branch = cfg.branch;
    rec.split_seed = split_seed;
    rec.model_seed = model_seed;
    rec.test_labels = gather_labels(tds.labels, sp.test);

    learners::RasterSource source(tds.rasters, windows);
    const Matrix eval = learners::eval_matrix(source, sp.test);
    learners::TrainTask task{tds.labels, tds.class_count, sp.train, &eval, rec.test_labels, root};
    auto result = learners::train_hybrid(source, task, cfg.hybrid);
    for (std::size_t i = 0; i < eval.rows(); ++i) {
        rec.predictions.push_back(learners::readout_predict(result.model, eval.row(i)));
    }
    rec.spikes_per_sample = mean_row_sum(eval);
    rec.epochs = cfg.hybrid.epochs;
    rec.param_count = result.model.parameter_count();
    rec.trajectory = std::move(result.trajectory);
    rec.readout = std::make_shared<const learners::ReadoutModel>(std::move(result.model));
    fill_scores(rec, tds.class_count);
    return rec;
}

std::vector<RunRecord> Workbench::run_experiment(const ExperimentSpec& spec) {
    return run_experiments({spec});
}

std::vector<RunRecord> Workbench::run_experiments(const std::vector<ExperimentSpec>& specs) {
    struct Job {
        const LearnerConfig* cfg;
        std::uint64_t split;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (const auto& spec : specs) {
        for (auto split_seed : spec.split_seeds) {
            for (auto seed : spec.model_seeds) jobs.push_back({&spec.learner, split_seed, seed});
        }
    }
    // Splits are computed up front so workers only read them.
    std::set<std::uint64_t> digit_splits;
    for (const auto& j : jobs) {
        if (j.cfg->branch != Branch::temporal_count && j.cfg->branch != Branch::temporal_timebin) {
            digit_splits.insert(j.split);
        }
    }
    for (auto s : digit_splits) split(s);

    std::vector<RunRecord> results(jobs.size());
    parallel_for(jobs.size(), options_.jobs,
                 [&](std::size_t i) { results[i] = run_one(*jobs[i].cfg, jobs[i].split, jobs[i].seed); });

    std::size_t k = 0;
    for (const auto& spec : specs) {
        for (std::size_t n = 0; n < spec.split_seeds.size() * spec.model_seeds.size(); ++n) {
            results[k++].experiment = spec.label;
        }
    }
    return results;
}

std::vector<ExperimentSpec> Workbench::baseline_specs() const {
    const auto& o = options_;
    return {
        {"logreg-pixels", {o.split_seed}, o.seeds, with_branch(Branch::logreg_pixels)},
        {"logreg-rates", {o.split_seed}, o.seeds, with_branch(Branch::logreg_rates)},
        {"hybrid", {o.split_seed}, o.seeds, with_branch(Branch::hybrid)},
        {"stdp-proxy", {o.split_seed}, o.seeds, with_branch(Branch::proxy)},
    };
}

std::vector<ExperimentSpec> Workbench::ablation_specs() const {
    const auto& o = options_;
    std::vector<ExperimentSpec> specs;
    auto add = [&](std::string label, const std::vector<std::uint64_t>& seeds, auto mutate) {
        LearnerConfig cfg = with_branch(Branch::hybrid);
        mutate(cfg);
        specs.push_back({std::move(label), {o.split_seed}, seeds, cfg});
    };
    auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%g", v);
        return std::string(buf);
    };
    for (std::size_t k : {1, 2, 4, 6}) {
        add("K=" + std::to_string(k), o.seeds, [k](LearnerConfig& c) { c.encoder.neurons_per_feature = k; });
    }
    for (double s : {0.15, 0.25, 0.35}) {
        add("sigma=" + fmt(s), o.seeds, [s](LearnerConfig& c) { c.encoder.sigma = s; });
    }
    for (double l : {100.0, 150.0, 200.0, 250.0}) {
        add("lambda_max=" + fmt(l), o.seeds, [l](LearnerConfig& c) { c.encoder.lambda_max = l; });
    }
    for (auto m : {learners::NormMode::on, learners::NormMode::gentle, learners::NormMode::off}) {
        add("norm=" + std::string(learners::to_string(m)), o.seeds_extended,
            [m](LearnerConfig& c) { c.hybrid.schedule = learners::NormSchedule::from_mode(m); });
    }
    for (auto s : {learners::Shaping::signed_reward, learners::Shaping::positive_only}) {
        add("reward=" + std::string(learners::to_string(s)), o.seeds_extended,
            [s](LearnerConfig& c) { c.hybrid.shaping = s; });
    }
    return specs;
}

std::vector<ExperimentSpec> Workbench::interaction_specs() const {
    const auto& o = options_;
    std::vector<ExperimentSpec> specs;
    for (auto m : {learners::NormMode::on, learners::NormMode::off}) {
        for (auto s : {learners::Shaping::signed_reward, learners::Shaping::positive_only}) {
            LearnerConfig cfg = with_branch(Branch::hybrid);
            cfg.hybrid.schedule = learners::NormSchedule::from_mode(m);
            cfg.hybrid.shaping = s;
            specs.push_back({std::string(learners::to_string(m)) + "+" + std::string(learners::to_string(s)),
                             {o.split_seed},
                             o.seeds_extended,
                             cfg});
        }
    }
    return specs;
}

std::vector<ExperimentSpec> Workbench::split_specs() const {
    const auto& o = options_;
    LearnerConfig def = with_branch(Branch::hybrid);
    LearnerConfig best = def;
    best.hybrid.schedule = learners::NormSchedule::off();
    return {
        {"default", o.robustness_split_seeds, o.seeds, def},
        {"norm-off", o.robustness_split_seeds, o.seeds, best},
    };
}

std::vector<ExperimentSpec> Workbench::temporal_specs() const {
    const auto& o = options_;
    return {
        {"count", {o.split_seed}, o.seeds, with_branch(Branch::temporal_count)},
        {"time-bin", {o.split_seed}, o.seeds, with_branch(Branch::temporal_timebin)},
    };
}

std::vector<RunRecord> Workbench::run_baselines() { return run_experiments(baseline_specs()); }
std::vector<RunRecord> Workbench::run_ablation_grid() { return run_experiments(ablation_specs()); }
std::vector<RunRecord> Workbench::run_interaction_2x2() { return run_experiments(interaction_specs()); }
std::vector<RunRecord> Workbench::run_split_robustness() { return run_experiments(split_specs()); }
std::vector<RunRecord> Workbench::run_temporal_benchmark() { return run_experiments(temporal_specs()); }

// ---------------------------------------------------------------------------

std::vector<RunRecord> select(const std::vector<RunRecord>& records, std::string_view label,
                              std::optional<std::uint64_t> split_seed) {
    std::vector<RunRecord> out;
    for (const auto& r : records) {
        if (r.experiment == label && (!split_seed || r.split_seed == *split_seed)) out.push_back(r);
    }
    std::stable_sort(out.begin(), out.end(), [](const RunRecord& a, const RunRecord& b) {
        return std::tie(a.split_seed, a.model_seed) < std::tie(b.split_seed, b.model_seed);
    });
    return out;
}

std::vector<double> accuracies(const std::vector<RunRecord>& records) {
    std::vector<double> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(r.accuracy_pct);
    return out;
}

namespace {

double mean_accuracy(const std::vector<RunRecord>& records, std::string_view label) {
    const auto acc = accuracies(select(records, label));
    if (acc.empty()) throw std::invalid_argument("no records for experiment '" + std::string(label) + "'");
    return stats::summarize(acc).mean;
}

}  // namespace

InteractionDeltas interaction_deltas(const std::vector<RunRecord>& records) {
    InteractionDeltas d;
    d.delta_norm_on = mean_accuracy(records, "on+pos-only") - mean_accuracy(records, "on+signed");
    d.delta_norm_off = mean_accuracy(records, "off+pos-only") - mean_accuracy(records, "off+signed");
    return d;
}

SplitSummary summarize_splits(const std::vector<RunRecord>& records) {
    std::set<std::uint64_t> seeds;
    for (const auto& r : records) seeds.insert(r.split_seed);
    SplitSummary out;
    std::vector<double> defaults;
    std::vector<double> bests;
    std::vector<double> deltas;
    for (auto s : seeds) {
        const auto def = accuracies(select(records, "default", s));
        const auto best = accuracies(select(records, "norm-off", s));
        if (def.empty() || best.empty()) {
            throw std::invalid_argument("split " + std::to_string(s) + " lacks default or norm-off runs");
        }
        SplitRow row{s, stats::summarize(def), stats::summarize(best), 0.0};
        row.delta = row.best_acc.mean - row.default_acc.mean;
        if (row.delta > 0.0) ++out.positive_splits;
        defaults.push_back(row.default_acc.mean);
        bests.push_back(row.best_acc.mean);
        deltas.push_back(row.delta);
        out.rows.push_back(row);
    }
    if (out.rows.empty()) throw std::invalid_argument("no split robustness records");
    out.across_default = stats::summarize(defaults);
    out.across_best = stats::summarize(bests);
    out.across_delta = stats::summarize(deltas);
    return out;
}

DiagnosticsBundle run_diagnostics(const std::vector<RunRecord>& baseline_records) {
    const auto hybrid = select(baseline_records, "hybrid");
    const auto proxy = select(baseline_records, "stdp-proxy");
    if (hybrid.empty() || proxy.empty()) {
        throw std::invalid_argument("diagnostics need hybrid and stdp-proxy baseline records");
    }
    DiagnosticsBundle d;
    const RunRecord* rep = &hybrid.front();
    const RunRecord* rep_proxy = &proxy.front();
    for (const auto& r : hybrid) {
        if (r.model_seed == kRepresentativeSeed && r.split_seed == kPrimarySplitSeed) rep = &r;
    }
    for (const auto& r : proxy) {
        if (r.model_seed == rep->model_seed && r.split_seed == rep->split_seed) rep_proxy = &r;
    }
    const std::size_t classes = rep->per_class_f1.size();
    d.confusion = stats::confusion_matrix(rep->test_labels, rep->predictions, classes);
    d.confusion_seed = rep->model_seed;
    d.hybrid_model = rep->readout;
    d.proxy_model = rep_proxy->proxy;

    d.per_class_f1_mean.assign(classes, 0.0);
    std::vector<double> spikes;
    for (const auto& r : hybrid) {
        for (std::size_t c = 0; c < classes; ++c) d.per_class_f1_mean[c] += r.per_class_f1[c];
        spikes.push_back(r.spikes_per_sample);
        d.expected_spikes_per_sample += r.expected_spikes;
    }
    for (auto& v : d.per_class_f1_mean) v /= static_cast<double>(hybrid.size());
    d.expected_spikes_per_sample /= static_cast<double>(hybrid.size());
    d.spikes_per_sample = stats::summarize(spikes);

    std::vector<double> low;
    std::vector<double> high;
    std::vector<double> margin;
    for (const auto& r : proxy) {
        low.push_back(r.saturation_low_pct);
        high.push_back(r.saturation_high_pct);
        margin.push_back(r.winner_margin);
    }
    d.saturation_low_pct = stats::summarize(low);
    d.saturation_high_pct = stats::summarize(high);
    d.winner_margin = stats::summarize(margin);
    d.hybrid_params = rep->param_count;
    d.proxy_params = rep_proxy->param_count;
    return d;
}

// ---------------------------------------------------------------------------

std::string hardware_string() {
    std::string model = "unknown CPU";
    std::ifstream cpuinfo("/proc/cpuinfo");
    for (std::string line; std::getline(cpuinfo, line);) {
        if (line.rfind("model name", 0) == 0) {
            if (auto pos = line.find(':'); pos != std::string::npos) {
                model = line.substr(pos + 1);
                model.erase(0, model.find_first_not_of(' '));
            }
            break;
        }
    }
    return model + " (" + std::to_string(std::max(1u, std::thread::hardware_concurrency())) + " threads)";
}

namespace {

template <typename Fn>
double median_us_per_sample(std::size_t repeats, std::size_t batch, Fn&& body) {
    std::vector<double> times;
    times.reserve(repeats);
    for (std::size_t r = 0; r < repeats; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        body();
        const auto t1 = std::chrono::steady_clock::now();
        times.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count() /
                        static_cast<double>(batch));
    }
    std::sort(times.begin(), times.end());
    const std::size_t n = times.size();
    return n % 2 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
}

}  // namespace

TimingReport run_timing(Workbench& bench, std::size_t repeats) {
    if (repeats == 0) throw std::invalid_argument("run_timing: repeats must be positive");
    const auto& o = bench.options();
    const auto& ds = bench.digits();
    const auto& sp = bench.split(o.split_seed);
    const std::uint64_t seed = std::find(o.seeds.begin(), o.seeds.end(), kRepresentativeSeed) != o.seeds.end()
                                   ? kRepresentativeSeed
                                   : o.seeds.front();

    LearnerConfig hcfg = o.base;
    hcfg.branch = Branch::hybrid;
    LearnerConfig pcfg = o.base;
    pcfg.branch = Branch::proxy;
    const auto hrec = bench.run_one(hcfg, o.split_seed, seed);
    const auto prec = bench.run_one(pcfg, o.split_seed, seed);

    TimingReport report;
    report.hardware = hardware_string();
    const std::size_t n = sp.test.size();
    std::vector<std::size_t> sink(n);

    learners::EncodedSource hsource(ds, hcfg.encoder, run_root(Branch::hybrid, o.split_seed, seed));
    learners::EncodedSource psource(ds, pcfg.encoder, run_root(Branch::proxy, o.split_seed, seed));
    const Matrix heval = learners::eval_matrix(hsource, sp.test);
    const Matrix peval = learners::eval_matrix(psource, sp.test);

    auto hybrid_forward = [&](const Matrix& m) {
        for (std::size_t i = 0; i < n; ++i) sink[i] = learners::readout_predict(*hrec.readout, m.row(i));
    };
    auto proxy_forward = [&](const Matrix& m) {
        for (std::size_t i = 0; i < n; ++i) sink[i] = learners::proxy_predict(*prec.proxy, m.row(i));
    };

    report.entries.push_back({"hybrid", "forward-only",
                              median_us_per_sample(repeats, n, [&] { hybrid_forward(heval); }), repeats, n});
    report.entries.push_back({"hybrid", "end-to-end",
                              median_us_per_sample(repeats, n, [&] { hybrid_forward(learners::eval_matrix(hsource, sp.test)); }),
                              repeats, n});
    report.entries.push_back({"stdp-proxy", "forward-only",
                              median_us_per_sample(repeats, n, [&] { proxy_forward(peval); }), repeats, n});
    report.entries.push_back({"stdp-proxy", "end-to-end",
                              median_us_per_sample(repeats, n, [&] { proxy_forward(learners::eval_matrix(psource, sp.test)); }),
                              repeats, n});
    return report;
}

}  // namespace spikebench::protocol
