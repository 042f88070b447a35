#include "spikebench/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace spikebench::encoding {

namespace {

void require_unit_interval(double x) {
    if (!(x >= 0.0 && x <= 1.0)) {
        throw std::invalid_argument("encoder: feature value " + std::to_string(x) +
                                    " outside [0,1]; normalize inputs first");
    }
}

}  // namespace

void EncoderConfig::validate() const {
    if (neurons_per_feature == 0) throw std::invalid_argument("encoder: K must be >= 1");
    if (!(sigma > 0.0)) throw std::invalid_argument("encoder: sigma must be > 0");
    if (!(lambda_max >= 0.0)) throw std::invalid_argument("encoder: lambda_max must be >= 0");
    if (!(dt > 0.0)) throw std::invalid_argument("encoder: dt must be > 0");
    if (lambda_max * dt > 1.0) {
        throw std::invalid_argument("encoder: lambda_max * dt exceeds 1 (invalid per-bin probability)");
    }
    if (window_bins == 0) throw std::invalid_argument("encoder: window must have at least one bin");
}

std::vector<double> EncoderConfig::centers() const {
    std::vector<double> mu(neurons_per_feature);
    if (neurons_per_feature == 1) {
        mu[0] = 0.5;
        return mu;
    }
    const double step = 1.0 / static_cast<double>(neurons_per_feature - 1);
    for (std::size_t k = 0; k < neurons_per_feature; ++k) mu[k] = static_cast<double>(k) * step;
    mu.back() = 1.0;
    return mu;
}

std::size_t SpikeRaster::total_spikes() const noexcept {
    return static_cast<std::size_t>(std::count(spikes_.begin(), spikes_.end(), std::uint8_t{1}));
}

std::vector<double> tuning_rates(double x, const EncoderConfig& cfg) {
    require_unit_interval(x);
    const auto mu = cfg.centers();
    const double denom = 2.0 * cfg.sigma * cfg.sigma;
    std::vector<double> rates(mu.size());
    for (std::size_t k = 0; k < mu.size(); ++k) {
        const double d = x - mu[k];
        rates[k] = cfg.lambda_max * std::exp(-(d * d) / denom);
    }
    return rates;
}

std::vector<double> channel_probabilities(std::span<const double> features, const EncoderConfig& cfg) {
    cfg.validate();
    const auto mu = cfg.centers();
    const double denom = 2.0 * cfg.sigma * cfg.sigma;
    std::vector<double> probs;
    probs.reserve(features.size() * mu.size());
    for (double x : features) {
        require_unit_interval(x);
        for (double m : mu) {
            const double d = x - m;
            probs.push_back(cfg.lambda_max * std::exp(-(d * d) / denom) * cfg.dt);
        }
    }
    return probs;
}

SpikeRaster encode_sample(std::span<const double> features, const EncoderConfig& cfg,
                          detrng::StreamState& stream) {
    const auto probs = channel_probabilities(features, cfg);
    SpikeRaster raster(probs.size(), cfg.window_bins);
    for (std::size_t c = 0; c < probs.size(); ++c) {
        // One range check per channel; the draws below are bernoulli(stream, p).
        const double p = probs[c];
        if (!(p >= 0.0 && p <= 1.0)) (void)detrng::bernoulli(stream, p);
        for (auto& bin : raster.channel(c)) bin = stream.next_uniform() < p ? 1 : 0;
    }
    return raster;
}

std::vector<double> rate_features(const SpikeRaster& raster) {
    std::vector<double> counts(raster.channels());
    for (std::size_t c = 0; c < raster.channels(); ++c) {
        const auto row = raster.channel(c);
        counts[c] = static_cast<double>(std::accumulate(row.begin(), row.end(), 0u));
    }
    return counts;
}

std::vector<double> binned_features(const SpikeRaster& raster, std::size_t bin_count) {
    if (bin_count == 0 || raster.bins() % bin_count != 0) {
        throw std::invalid_argument("binned_features: " + std::to_string(bin_count) +
                                    " windows do not divide " + std::to_string(raster.bins()) +
                                    " bins");
    }
    const std::size_t width = raster.bins() / bin_count;
    std::vector<double> out(raster.channels() * bin_count, 0.0);
    for (std::size_t c = 0; c < raster.channels(); ++c) {
        const auto row = raster.channel(c);
        for (std::size_t t = 0; t < row.size(); ++t) {
            out[c * bin_count + t / width] += row[t];
        }
    }
    return out;
}

double expected_spike_count(std::span<const double> features, const EncoderConfig& cfg) {
    const auto probs = channel_probabilities(features, cfg);
    return std::accumulate(probs.begin(), probs.end(), 0.0) * static_cast<double>(cfg.window_bins);
}

double spike_count_variance(std::span<const double> features, const EncoderConfig& cfg) {
    const auto probs = channel_probabilities(features, cfg);
    double var = 0.0;
    for (double p : probs) var += p * (1.0 - p);
    return var * static_cast<double>(cfg.window_bins);
}

}  // namespace spikebench::encoding
