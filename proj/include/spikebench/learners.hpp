#pragma once

// The two evaluated local learners plus the static softmax controls.
//
// Hybrid readout:  p = softmax(W r + b), W += lr * delta * r^T, b += lr * delta
// with delta = y - p (signed) or y * (1 - p) (positive-only), followed by an
// optional post-epoch class-row rescaling.
//
// Competitive proxy: winner-take-all prototypes with bounded updates, runner-up
// depression under signed shaping, threshold homeostasis, and neuron->class votes.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spikebench/data.hpp"
#include "spikebench/detrng.hpp"
#include "spikebench/encoding.hpp"
#include "spikebench/matrix.hpp"

namespace spikebench::learners {

enum class Shaping { signed_reward, positive_only };

std::string_view to_string(Shaping s) noexcept;
Shaping parse_shaping(std::string_view text);

enum class NormMode { on, gentle, off };

std::string_view to_string(NormMode m) noexcept;
NormMode parse_norm_mode(std::string_view text);

struct NormSchedule {
    NormMode mode = NormMode::on;
    double scale = 0.98;
    std::size_t interval = 1;
    double epsilon = 1e-8;

    static NormSchedule on() { return {NormMode::on, 0.98, 1}; }
    static NormSchedule gentle() { return {NormMode::gentle, 0.995, 5}; }
    static NormSchedule off() { return {NormMode::off, 1.0, 1}; }
    static NormSchedule from_mode(NormMode m);

    /// True when normalization runs after 1-based epoch `epoch`.
    bool applies_after(std::size_t epoch) const noexcept;
};

// ---------------------------------------------------------------------------
// Hybrid readout

struct ReadoutModel {
    Matrix weights;  // classes x features
    std::vector<double> bias;

    static ReadoutModel zeros(std::size_t classes, std::size_t features);

    std::size_t classes() const noexcept { return weights.rows(); }
    std::size_t features() const noexcept { return weights.cols(); }
    std::size_t parameter_count() const noexcept { return weights.size() + bias.size(); }

    friend bool operator==(const ReadoutModel&, const ReadoutModel&) = default;
};

std::vector<double> readout_logits(const ReadoutModel& model, std::span<const double> r);

/// Max-subtracted softmax of W r + b. Throws on dimension mismatch.
std::vector<double> readout_forward(const ReadoutModel& model, std::span<const double> r);

/// argmax of the logits, lowest index on ties.
std::size_t readout_predict(const ReadoutModel& model, std::span<const double> r);

std::vector<double> shaped_delta(std::span<const double> p, std::size_t target, Shaping shaping);

/// One-hot form; throws std::invalid_argument if `y` is not one-hot.
std::vector<double> shaped_delta(std::span<const double> p, std::span<const double> y,
                                 Shaping shaping);

void readout_update(ReadoutModel& model, std::span<const double> r, std::size_t target,
                    Shaping shaping, double lr = 0.003);

void apply_normalization(ReadoutModel& model, const NormSchedule& schedule,
                         std::size_t epoch_just_finished);

double mean_row_norm(const ReadoutModel& model);

// ---------------------------------------------------------------------------
// Feature sources: where a learner gets the vector for (sample, epoch).

class FeatureSource {
public:
    virtual ~FeatureSource() = default;
    virtual std::size_t dimension() const = 0;
    /// Training presentation of `sample` during 1-based `epoch`.
    virtual std::vector<double> train_features(std::size_t sample, std::size_t epoch) const = 0;
    /// Fixed evaluation vector of `sample`.
    virtual std::vector<double> eval_features(std::size_t sample) const = 0;
    /// Whether feature sums are spike counts.
    virtual bool spiking() const { return true; }
};

/// Population-coded digits. Train rasters are redrawn per epoch from
/// root/encode-train/epoch:e/sample:i unless `static_train`, in which case
/// epoch 0 is always used. Eval rasters come from root/encode-test/epoch:0/sample:i.
class EncodedSource final : public FeatureSource {
public:
    EncodedSource(const data::Dataset& ds, encoding::EncoderConfig cfg, detrng::SeedPath root,
                  bool static_train = false);

    std::size_t dimension() const override;
    std::vector<double> train_features(std::size_t sample, std::size_t epoch) const override;
    std::vector<double> eval_features(std::size_t sample) const override;

    encoding::SpikeRaster train_raster(std::size_t sample, std::size_t epoch) const;
    encoding::SpikeRaster eval_raster(std::size_t sample) const;

    const encoding::EncoderConfig& config() const noexcept { return cfg_; }

private:
    const data::Dataset* ds_;
    encoding::EncoderConfig cfg_;
    detrng::SeedPath root_;
    bool static_train_;
};

/// Fixed feature rows (pixels, precomputed vectors).
class StaticSource final : public FeatureSource {
public:
    explicit StaticSource(Matrix features, bool spiking = false)
        : features_(std::move(features)), spiking_(spiking) {}

    std::size_t dimension() const override { return features_.cols(); }
    std::vector<double> train_features(std::size_t sample, std::size_t) const override;
    std::vector<double> eval_features(std::size_t sample) const override;
    bool spiking() const override { return spiking_; }

private:
    Matrix features_;
    bool spiking_;
};

/// Pre-generated rasters read out as counts in `windows` equal time windows (1 = plain counts).
class RasterSource final : public FeatureSource {
public:
    RasterSource(const std::vector<encoding::SpikeRaster>& rasters, std::size_t windows);

    std::size_t dimension() const override;
    std::vector<double> train_features(std::size_t sample, std::size_t) const override;
    std::vector<double> eval_features(std::size_t sample) const override;

private:
    const std::vector<encoding::SpikeRaster>* rasters_;
    std::size_t windows_;
};

/// Labels and index sets a trainer works on. `eval` rows pair with `eval_labels`.
struct TrainTask {
    std::span<const std::size_t> labels;  // indexed by sample id
    std::size_t class_count = 0;
    std::span<const std::size_t> train;   // sample ids
    const Matrix* eval = nullptr;         // optional, for trajectories
    std::span<const std::size_t> eval_labels;
    detrng::SeedPath root;                // run root: order and init streams hang off it
};

/// Encodes `samples` through `source.eval_features`, one row each.
Matrix eval_matrix(const FeatureSource& source, std::span<const std::size_t> samples);

struct HybridConfig {
    std::size_t epochs = 18;
    double lr = 0.003;
    Shaping shaping = Shaping::signed_reward;
    NormSchedule schedule = NormSchedule::on();
};

struct TrainTrajectory {
    std::vector<double> test_accuracy_pct;
    std::vector<double> mean_row_norm;
};

struct HybridResult {
    ReadoutModel model;
    TrainTrajectory trajectory;
};

/// Per-epoch order from root/train-order/epoch:e. Throws on an empty training set.
HybridResult train_hybrid(const FeatureSource& source, const TrainTask& task,
                          const HybridConfig& cfg = {});

struct SoftmaxBaselineConfig {
    std::size_t epochs = 60;
    double lr = 0.01;
};

/// Same delta-rule trainer on static features, signed shaping, no normalization.
ReadoutModel train_softmax_baseline(const FeatureSource& source, const TrainTask& task,
                                    const SoftmaxBaselineConfig& cfg = {});

double accuracy_pct(const ReadoutModel& model, const Matrix& features,
                    std::span<const std::size_t> labels);

// ---------------------------------------------------------------------------
// Competitive proxy

struct ProxyConfig {
    std::size_t neurons = 96;
    std::size_t epochs = 9;
    double eta_plus = 0.08;
    double eta_minus = 0.01;
    double w_min = 0.0;
    double w_max = 1.0;
    double delta_theta = 0.05;
    double rho = 0.995;
    double epsilon = 1e-8;
    Shaping shaping = Shaping::signed_reward;
};

struct ProxyModel {
    Matrix prototypes;                  // neurons x features
    std::vector<double> thresholds;     // neurons
    std::vector<std::uint64_t> votes;   // neurons x classes, row-major
    std::size_t class_count = 0;
    ProxyConfig cfg;

    std::size_t neurons() const noexcept { return prototypes.rows(); }
    std::size_t features() const noexcept { return prototypes.cols(); }
    std::size_t parameter_count() const noexcept { return prototypes.size() + thresholds.size(); }
    std::uint64_t vote(std::size_t neuron, std::size_t cls) const noexcept {
        return votes[neuron * class_count + cls];
    }
    std::uint64_t total_votes() const noexcept;
};

/// Uniform [0,1] prototypes (row-major draws from `init`), each L2-normalized; theta = 0; no votes.
ProxyModel init_proxy(std::size_t features, std::size_t classes, const ProxyConfig& cfg,
                      detrng::StreamState& init);

/// x / ||x||, or x unchanged when it is the zero vector.
std::vector<double> unit_vector(std::span<const double> x);

/// a = x_hat W^T - theta.
std::vector<double> proxy_score(const ProxyModel& model, std::span<const double> x);

struct Competition {
    std::size_t winner = 0;
    std::size_t runner_up = 0;
    double margin = 0.0;
};

/// Winner and runner-up by activation, lowest index on ties.
Competition compete(std::span<const double> activations);

void proxy_step(ProxyModel& model, std::span<const double> x, std::size_t label);

ProxyModel proxy_fit(const FeatureSource& source, const TrainTask& task, const ProxyConfig& cfg = {});

/// Class of the winning neuron by vote; a neuron with no votes falls back to the
/// class with most votes overall. Throws std::logic_error when no votes exist.
std::size_t proxy_predict(const ProxyModel& model, std::span<const double> x);

/// Fraction (0..1) of prototype weights exactly at w_min and at w_max.
std::pair<double, double> proxy_saturation(const ProxyModel& model);

// ---------------------------------------------------------------------------
// Flat binary snapshots: magic, kind, dims, then little-endian f64 row-major payload.

void save_model(std::ostream& out, const ReadoutModel& model);
void save_model(std::ostream& out, const ProxyModel& model);
ReadoutModel load_readout(std::istream& in);
ProxyModel load_proxy(std::istream& in);

}  // namespace spikebench::learners
