#include "spikebench/learners.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace spikebench::learners {

std::string_view to_string(Shaping s) noexcept {
    return s == Shaping::signed_reward ? "signed" : "pos-only";
}

Shaping parse_shaping(std::string_view text) {
    if (text == "signed") return Shaping::signed_reward;
    if (text == "pos-only" || text == "positive_only" || text == "positive-only") {
        return Shaping::positive_only;
    }
    throw std::invalid_argument("unknown reward shaping '" + std::string(text) +
                                "' (expected signed or pos-only)");
}

std::string_view to_string(NormMode m) noexcept {
    switch (m) {
        case NormMode::on: return "on";
        case NormMode::gentle: return "gentle";
        case NormMode::off: return "off";
    }
    return "?";
}

NormMode parse_norm_mode(std::string_view text) {
    if (text == "on") return NormMode::on;
    if (text == "gentle") return NormMode::gentle;
    if (text == "off") return NormMode::off;
    throw std::invalid_argument("unknown normalization mode '" + std::string(text) +
                                "' (expected on, gentle or off)");
}

NormSchedule NormSchedule::from_mode(NormMode m) {
    switch (m) {
        case NormMode::on: return on();
        case NormMode::gentle: return gentle();
        case NormMode::off: return off();
    }
    return on();
}

bool NormSchedule::applies_after(std::size_t epoch) const noexcept {
    if (mode == NormMode::off || interval == 0) return false;
    return epoch >= 1 && epoch % interval == 0;
}

// ---------------------------------------------------------------------------

ReadoutModel ReadoutModel::zeros(std::size_t classes, std::size_t features) {
    return {Matrix(classes, features), std::vector<double>(classes, 0.0)};
}

std::vector<double> readout_logits(const ReadoutModel& model, std::span<const double> r) {
    if (r.size() != model.features()) {
        throw std::invalid_argument("readout: feature dimension " + std::to_string(r.size()) +
                                    " != model dimension " + std::to_string(model.features()));
    }
    std::vector<double> z(model.classes());
    for (std::size_t c = 0; c < z.size(); ++c) {
        const auto w = model.weights.row(c);
        z[c] = std::inner_product(w.begin(), w.end(), r.begin(), model.bias[c]);
    }
    return z;
}

std::vector<double> readout_forward(const ReadoutModel& model, std::span<const double> r) {
    auto p = readout_logits(model, r);
    const double zmax = *std::max_element(p.begin(), p.end());
    double total = 0.0;
    for (auto& v : p) {
        v = std::exp(v - zmax);
        total += v;
    }
    for (auto& v : p) v /= total;
    return p;
}

std::size_t readout_predict(const ReadoutModel& model, std::span<const double> r) {
    const auto z = readout_logits(model, r);
    return static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
}

std::vector<double> shaped_delta(std::span<const double> p, std::size_t target, Shaping shaping) {
    if (target >= p.size()) throw std::invalid_argument("shaped_delta: target outside classes");
    std::vector<double> delta(p.size(), 0.0);
    if (shaping == Shaping::signed_reward) {
        for (std::size_t c = 0; c < p.size(); ++c) delta[c] = (c == target ? 1.0 : 0.0) - p[c];
    } else {
        delta[target] = 1.0 - p[target];
    }
    return delta;
}

std::vector<double> shaped_delta(std::span<const double> p, std::span<const double> y,
                                 Shaping shaping) {
    if (y.size() != p.size()) throw std::invalid_argument("shaped_delta: size mismatch");
    std::size_t hot = y.size();
    for (std::size_t c = 0; c < y.size(); ++c) {
        if (y[c] == 1.0 && hot == y.size()) {
            hot = c;
        } else if (y[c] != 0.0) {
            throw std::invalid_argument("shaped_delta: target is not one-hot");
        }
    }
    if (hot == y.size()) throw std::invalid_argument("shaped_delta: target is not one-hot");
    return shaped_delta(p, hot, shaping);
}

void readout_update(ReadoutModel& model, std::span<const double> r, std::size_t target,
                    Shaping shaping, double lr) {
    const auto p = readout_forward(model, r);
    const auto delta = shaped_delta(p, target, shaping);
    for (std::size_t c = 0; c < delta.size(); ++c) {
        if (delta[c] == 0.0) continue;
        const double g = lr * delta[c];
        auto w = model.weights.row(c);
        for (std::size_t j = 0; j < w.size(); ++j) w[j] += g * r[j];
        model.bias[c] += g;
    }
}

void apply_normalization(ReadoutModel& model, const NormSchedule& schedule,
                         std::size_t epoch_just_finished) {
    if (!schedule.applies_after(epoch_just_finished)) return;
    for (std::size_t c = 0; c < model.classes(); ++c) {
        auto w = model.weights.row(c);
        const double norm = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
        const double factor = schedule.scale / (norm + schedule.epsilon);
        for (auto& v : w) v *= factor;
    }
}

double mean_row_norm(const ReadoutModel& model) {
    if (model.classes() == 0) return 0.0;
    double total = 0.0;
    for (std::size_t c = 0; c < model.classes(); ++c) {
        const auto w = model.weights.row(c);
        total += std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
    }
    return total / static_cast<double>(model.classes());
}

// ---------------------------------------------------------------------------

EncodedSource::EncodedSource(const data::Dataset& ds, encoding::EncoderConfig cfg,
                             detrng::SeedPath root, bool static_train)
    : ds_(&ds), cfg_(cfg), root_(std::move(root)), static_train_(static_train) {
    cfg_.validate();
}

std::size_t EncodedSource::dimension() const { return cfg_.channels_for(ds_->feature_count()); }

encoding::SpikeRaster EncodedSource::train_raster(std::size_t sample, std::size_t epoch) const {
    auto stream = root_.child("encode-train")
                      .child("epoch", static_train_ ? 0 : epoch)
                      .child("sample", sample)
                      .resolve();
    return encoding::encode_sample(ds_->sample(sample), cfg_, stream);
}

encoding::SpikeRaster EncodedSource::eval_raster(std::size_t sample) const {
    auto stream = root_.child("encode-test").child("epoch", 0).child("sample", sample).resolve();
    return encoding::encode_sample(ds_->sample(sample), cfg_, stream);
}

std::vector<double> EncodedSource::train_features(std::size_t sample, std::size_t epoch) const {
    return encoding::rate_features(train_raster(sample, epoch));
}

std::vector<double> EncodedSource::eval_features(std::size_t sample) const {
    return encoding::rate_features(eval_raster(sample));
}

std::vector<double> StaticSource::train_features(std::size_t sample, std::size_t) const {
    const auto row = features_.row(sample);
    return {row.begin(), row.end()};
}

std::vector<double> StaticSource::eval_features(std::size_t sample) const {
    return train_features(sample, 0);
}

RasterSource::RasterSource(const std::vector<encoding::SpikeRaster>& rasters, std::size_t windows)
    : rasters_(&rasters), windows_(windows) {
    if (rasters.empty()) throw std::invalid_argument("RasterSource: no rasters");
    if (windows == 0 || rasters.front().bins() % windows != 0) {
        throw std::invalid_argument("RasterSource: window count must divide the raster length");
    }
}

std::size_t RasterSource::dimension() const { return rasters_->front().channels() * windows_; }

std::vector<double> RasterSource::train_features(std::size_t sample, std::size_t) const {
    return encoding::binned_features((*rasters_)[sample], windows_);
}

std::vector<double> RasterSource::eval_features(std::size_t sample) const {
    return train_features(sample, 0);
}

Matrix eval_matrix(const FeatureSource& source, std::span<const std::size_t> samples) {
    Matrix out(samples.size(), source.dimension());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto f = source.eval_features(samples[i]);
        std::copy(f.begin(), f.end(), out.row(i).begin());
    }
    return out;
}

double accuracy_pct(const ReadoutModel& model, const Matrix& features,
                    std::span<const std::size_t> labels) {
    if (labels.empty()) return 0.0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (readout_predict(model, features.row(i)) == labels[i]) ++correct;
    }
    return 100.0 * static_cast<double>(correct) / static_cast<double>(labels.size());
}

namespace {

std::vector<std::size_t> epoch_order(const TrainTask& task, std::size_t epoch) {
    auto stream = task.root.child("train-order").child("epoch", epoch).resolve();
    const auto perm = detrng::shuffle(stream, task.train.size());
    std::vector<std::size_t> order(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) order[i] = task.train[perm[i]];
    return order;
}

void require_task(const TrainTask& task) {
    if (task.train.empty()) throw std::invalid_argument("training set is empty");
    if (task.class_count == 0) throw std::invalid_argument("class_count must be positive");
}

}  // namespace

HybridResult train_hybrid(const FeatureSource& source, const TrainTask& task,
                          const HybridConfig& cfg) {
    require_task(task);
    HybridResult result{ReadoutModel::zeros(task.class_count, source.dimension()), {}};
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        for (std::size_t sample : epoch_order(task, epoch)) {
            const auto r = source.train_features(sample, epoch);
            readout_update(result.model, r, task.labels[sample], cfg.shaping, cfg.lr);
        }
        apply_normalization(result.model, cfg.schedule, epoch);
        if (task.eval != nullptr) {
            result.trajectory.test_accuracy_pct.push_back(
                accuracy_pct(result.model, *task.eval, task.eval_labels));
        }
        result.trajectory.mean_row_norm.push_back(mean_row_norm(result.model));
    }
    return result;
}

ReadoutModel train_softmax_baseline(const FeatureSource& source, const TrainTask& task,
                                    const SoftmaxBaselineConfig& cfg) {
    TrainTask quiet = task;
    quiet.eval = nullptr;
    HybridConfig hc;
    hc.epochs = cfg.epochs;
    hc.lr = cfg.lr;
    hc.shaping = Shaping::signed_reward;
    hc.schedule = NormSchedule::off();
    return train_hybrid(source, quiet, hc).model;
}

// ---------------------------------------------------------------------------

std::uint64_t ProxyModel::total_votes() const noexcept {
    return std::accumulate(votes.begin(), votes.end(), std::uint64_t{0});
}

namespace {

double l2_norm(std::span<const double> v) {
    return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
}

void clip_and_renormalize(std::span<double> w, const ProxyConfig& cfg) {
    for (auto& v : w) v = std::clamp(v, cfg.w_min, cfg.w_max);
    const double norm = l2_norm(w);
    for (auto& v : w) v /= norm + cfg.epsilon;
}

}  // namespace

ProxyModel init_proxy(std::size_t features, std::size_t classes, const ProxyConfig& cfg,
                      detrng::StreamState& init) {
    if (cfg.neurons < 2) throw std::invalid_argument("proxy: need at least two neurons");
    if (classes == 0 || features == 0) throw std::invalid_argument("proxy: empty dimensions");
    ProxyModel model;
    model.cfg = cfg;
    model.class_count = classes;
    model.prototypes = Matrix(cfg.neurons, features);
    for (auto& v : model.prototypes.data()) v = init.next_uniform();
    for (std::size_t n = 0; n < cfg.neurons; ++n) {
        auto w = model.prototypes.row(n);
        const double norm = l2_norm(w);
        for (auto& v : w) v /= norm;
    }
    model.thresholds.assign(cfg.neurons, 0.0);
    model.votes.assign(cfg.neurons * classes, 0);
    return model;
}

std::vector<double> unit_vector(std::span<const double> x) {
    std::vector<double> out(x.begin(), x.end());
    const double norm = l2_norm(x);
    if (norm > 0.0) {
        for (auto& v : out) v /= norm;
    }
    return out;
}

namespace {

std::vector<double> score_unit(const ProxyModel& model, std::span<const double> xhat) {
    std::vector<double> a(model.neurons());
    for (std::size_t n = 0; n < a.size(); ++n) {
        const auto w = model.prototypes.row(n);
        a[n] = std::inner_product(w.begin(), w.end(), xhat.begin(), 0.0) - model.thresholds[n];
    }
    return a;
}

}  // namespace

std::vector<double> proxy_score(const ProxyModel& model, std::span<const double> x) {
    if (x.size() != model.features()) throw std::invalid_argument("proxy_score: dimension mismatch");
    return score_unit(model, unit_vector(x));
}

Competition compete(std::span<const double> activations) {
    if (activations.size() < 2) throw std::invalid_argument("compete: need two or more scores");
    Competition c;
    c.winner = 0;
    c.runner_up = 1;
    if (activations[1] > activations[0]) std::swap(c.winner, c.runner_up);
    for (std::size_t n = 2; n < activations.size(); ++n) {
        if (activations[n] > activations[c.winner]) {
            c.runner_up = c.winner;
            c.winner = n;
        } else if (activations[n] > activations[c.runner_up]) {
            c.runner_up = n;
        }
    }
    c.margin = activations[c.winner] - activations[c.runner_up];
    return c;
}

void proxy_step(ProxyModel& model, std::span<const double> x, std::size_t label) {
    if (x.size() != model.features()) throw std::invalid_argument("proxy_step: dimension mismatch");
    if (label >= model.class_count) throw std::invalid_argument("proxy_step: label out of range");
    const auto& cfg = model.cfg;
    const auto xhat = unit_vector(x);
    const auto c = compete(score_unit(model, xhat));

    auto winner = model.prototypes.row(c.winner);
    for (std::size_t j = 0; j < winner.size(); ++j) winner[j] += cfg.eta_plus * (xhat[j] - winner[j]);

    if (cfg.shaping == Shaping::signed_reward) {
        auto runner = model.prototypes.row(c.runner_up);
        for (std::size_t j = 0; j < runner.size(); ++j) runner[j] -= cfg.eta_minus * xhat[j];
        clip_and_renormalize(runner, cfg);
    }
    clip_and_renormalize(winner, cfg);

    model.thresholds[c.winner] += cfg.delta_theta;
    for (auto& t : model.thresholds) t *= cfg.rho;
    ++model.votes[c.winner * model.class_count + label];
}

ProxyModel proxy_fit(const FeatureSource& source, const TrainTask& task, const ProxyConfig& cfg) {
    require_task(task);
    auto init = task.root.child("init").resolve();
    ProxyModel model = init_proxy(source.dimension(), task.class_count, cfg, init);
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        for (std::size_t sample : epoch_order(task, epoch)) {
            proxy_step(model, source.train_features(sample, epoch), task.labels[sample]);
        }
    }
    return model;
}

std::size_t proxy_predict(const ProxyModel& model, std::span<const double> x) {
    if (model.total_votes() == 0) throw std::logic_error("proxy_predict: model has no votes");
    const auto c = compete(proxy_score(model, x));
    auto argmax_class = [&](auto vote_of) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < model.class_count; ++k) {
            if (vote_of(k) > vote_of(best)) best = k;
        }
        return best;
    };
    std::uint64_t row_total = 0;
    for (std::size_t k = 0; k < model.class_count; ++k) row_total += model.vote(c.winner, k);
    if (row_total > 0) {
        return argmax_class([&](std::size_t k) { return model.vote(c.winner, k); });
    }
    return argmax_class([&](std::size_t k) {
        std::uint64_t s = 0;
        for (std::size_t n = 0; n < model.neurons(); ++n) s += model.vote(n, k);
        return s;
    });
}

std::pair<double, double> proxy_saturation(const ProxyModel& model) {
    const auto w = model.prototypes.data();
    if (w.empty()) return {0.0, 0.0};
    const auto low = std::count(w.begin(), w.end(), model.cfg.w_min);
    const auto high = std::count(w.begin(), w.end(), model.cfg.w_max);
    const auto n = static_cast<double>(w.size());
    return {static_cast<double>(low) / n, static_cast<double>(high) / n};
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'S', 'P', 'K', 'B'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kKindReadout = 1;
constexpr std::uint32_t kKindProxy = 2;

void put_u64(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b, 8);
}

void put_u32(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
    out.write(b, 4);
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint64_t get_u64(std::istream& in) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("model snapshot truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{b[i]} << (8 * i);
    return v;
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("model snapshot truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{b[i]} << (8 * i);
    return v;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

void put_header(std::ostream& out, std::uint32_t kind) {
    out.write(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, kind);
}

void expect_header(std::istream& in, std::uint32_t kind) {
    char magic[4];
    if (!in.read(magic, 4) || !std::equal(magic, magic + 4, kMagic)) {
        throw std::runtime_error("not a model snapshot");
    }
    if (get_u32(in) != kVersion) throw std::runtime_error("unsupported snapshot version");
    if (get_u32(in) != kind) throw std::runtime_error("snapshot holds a different model kind");
}

std::uint64_t checked_dim(std::istream& in) {
    const auto v = get_u64(in);
    if (v > (std::uint64_t{1} << 32)) throw std::runtime_error("snapshot dimension implausible");
    return v;
}

}  // namespace

void save_model(std::ostream& out, const ReadoutModel& model) {
    put_header(out, kKindReadout);
    put_u64(out, model.classes());
    put_u64(out, model.features());
    for (double v : model.weights.data()) put_f64(out, v);
    for (double v : model.bias) put_f64(out, v);
}

void save_model(std::ostream& out, const ProxyModel& model) {
    put_header(out, kKindProxy);
    put_u64(out, model.neurons());
    put_u64(out, model.features());
    put_u64(out, model.class_count);
    const auto& c = model.cfg;
    put_u64(out, c.epochs);
    for (double v : {c.eta_plus, c.eta_minus, c.w_min, c.w_max, c.delta_theta, c.rho, c.epsilon}) {
        put_f64(out, v);
    }
    put_u32(out, c.shaping == Shaping::signed_reward ? 0 : 1);
    for (double v : model.prototypes.data()) put_f64(out, v);
    for (double v : model.thresholds) put_f64(out, v);
    for (auto v : model.votes) put_u64(out, v);
}

ReadoutModel load_readout(std::istream& in) {
    expect_header(in, kKindReadout);
    const auto rows = checked_dim(in);
    const auto cols = checked_dim(in);
    auto model = ReadoutModel::zeros(rows, cols);
    for (auto& v : model.weights.data()) v = get_f64(in);
    for (auto& v : model.bias) v = get_f64(in);
    return model;
}

ProxyModel load_proxy(std::istream& in) {
    expect_header(in, kKindProxy);
    ProxyModel model;
    const auto neurons = checked_dim(in);
    const auto features = checked_dim(in);
    model.class_count = checked_dim(in);
    auto& c = model.cfg;
    c.neurons = neurons;
    c.epochs = get_u64(in);
    for (double* p : {&c.eta_plus, &c.eta_minus, &c.w_min, &c.w_max, &c.delta_theta, &c.rho, &c.epsilon}) {
        *p = get_f64(in);
    }
    c.shaping = get_u32(in) == 0 ? Shaping::signed_reward : Shaping::positive_only;
    model.prototypes = Matrix(neurons, features);
    for (auto& v : model.prototypes.data()) v = get_f64(in);
    model.thresholds.resize(neurons);
    for (auto& v : model.thresholds) v = get_f64(in);
    model.votes.resize(neurons * model.class_count);
    for (auto& v : model.votes) v = get_u64(in);
    return model;
}

}  // namespace spikebench::learners
