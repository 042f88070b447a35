#pragma once

// Gaussian-tuned Poisson population code.
//
// Each feature x in [0,1] drives K channels with rates
//   lambda_k(x) = lambda_max * exp(-(x - mu_k)^2 / (2 sigma^2))
// and every (channel, bin) spikes independently with probability lambda_k * dt.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "spikebench/detrng.hpp"

namespace spikebench::encoding {

struct EncoderConfig {
    std::size_t neurons_per_feature = 4;
    double sigma = 0.25;
    double lambda_max = 200.0;  // Hz
    double dt = 0.001;          // s
    std::size_t window_bins = 120;

    /// Throws std::invalid_argument on K == 0, sigma <= 0, negative rate, or rate*dt > 1.
    void validate() const;

    /// Tuning centers, evenly spaced on [0,1] including both endpoints (K == 1 gives 0.5).
    std::vector<double> centers() const;

    std::size_t channels_for(std::size_t features) const noexcept {
        return features * neurons_per_feature;
    }
};

/// Binary spike matrix, channels x bins, stored channel-major.
class SpikeRaster {
public:
    SpikeRaster() = default;
    SpikeRaster(std::size_t channels, std::size_t bins)
        : channels_(channels), bins_(bins), spikes_(channels * bins, 0) {}

    std::size_t channels() const noexcept { return channels_; }
    std::size_t bins() const noexcept { return bins_; }

    bool at(std::size_t channel, std::size_t bin) const noexcept {
        return spikes_[channel * bins_ + bin] != 0;
    }
    void set(std::size_t channel, std::size_t bin, bool spike) noexcept {
        spikes_[channel * bins_ + bin] = spike ? 1 : 0;
    }
    std::span<const std::uint8_t> channel(std::size_t c) const noexcept {
        return {spikes_.data() + c * bins_, bins_};
    }
    std::span<std::uint8_t> channel(std::size_t c) noexcept {
        return {spikes_.data() + c * bins_, bins_};
    }

    std::size_t total_spikes() const noexcept;

    friend bool operator==(const SpikeRaster&, const SpikeRaster&) = default;

private:
    std::size_t channels_ = 0;
    std::size_t bins_ = 0;
    std::vector<std::uint8_t> spikes_;
};

/// K rates in Hz for one feature value. Throws when x is outside [0,1].
std::vector<double> tuning_rates(double x, const EncoderConfig& cfg);

/// Per-channel spike probabilities for a whole feature vector (channel = feature*K + k).
std::vector<double> channel_probabilities(std::span<const double> features, const EncoderConfig& cfg);

/// Draws one raster. Stream consumption order: channel-major, then bin.
SpikeRaster encode_sample(std::span<const double> features, const EncoderConfig& cfg,
                          detrng::StreamState& stream);

/// Per-channel spike counts over the window.
std::vector<double> rate_features(const SpikeRaster& raster);

/// Per-channel counts in `bin_count` equal contiguous windows; layout channel-major then window.
std::vector<double> binned_features(const SpikeRaster& raster, std::size_t bin_count);

/// Sum over channels of lambda * dt * T.
double expected_spike_count(std::span<const double> features, const EncoderConfig& cfg);

/// Poisson-binomial variance of the total spike count.
double spike_count_variance(std::span<const double> features, const EncoderConfig& cfg);

}  // namespace spikebench::encoding
