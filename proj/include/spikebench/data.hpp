#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "spikebench/detrng.hpp"
#include "spikebench/encoding.hpp"
#include "spikebench/matrix.hpp"

namespace spikebench::data {

/// Malformed, missing or inconsistent input data.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Dataset {
    Matrix features;  // samples x F, values in [0,1]
    std::vector<std::size_t> labels;
    std::size_t class_count = 0;
    std::string provenance;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t feature_count() const noexcept { return features.cols(); }
    std::span<const double> sample(std::size_t i) const noexcept { return features.row(i); }
};

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
};

inline constexpr std::size_t kDigitsFeatures = 64;
inline constexpr std::size_t kDigitsClasses = 10;
inline constexpr double kDigitsMaxIntensity = 16.0;

/// Comma-separated integer rows: `feature_count` cells in [0, max_value] followed by a label.
/// Files ending in `.gz` are decompressed transparently.
Dataset load_csv_generic(const std::filesystem::path& path, std::size_t feature_count,
                         double max_value, std::optional<std::size_t> class_count = std::nullopt);

/// 8x8 optical digits: 64 intensities in 0..16 plus a label, exactly 10 classes.
Dataset load_digits(const std::filesystem::path& path);

/// MNIST-style IDX pair (ubyte images of any rank >= 2, ubyte labels).
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 double max_value = 255.0);

/// Locates digits.csv or digits.csv.gz in `data_dir`; the error text explains how to obtain it.
std::filesystem::path find_digits_file(const std::filesystem::path& data_dir);

// ---------------------------------------------------------------------------
// Checksum registry

struct KnownFile {
    std::string_view name;
    std::string_view sha256;
    std::string_view description;
};

std::span<const KnownFile> known_files();

enum class ChecksumStatus { match, mismatch, unknown };

ChecksumStatus check_known_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Splitting

/// Two-stage stratified split. Each class is shuffled from stream ("split", seed)/("class", c).
/// Test takes ceil(20%) of all samples, shared out over classes by largest remainder
/// (ties to the lower class); validation takes ceil(20%) of the rest the same way.
/// Index lists are sorted.
SplitIndices stratified_split(std::span<const std::size_t> labels, std::size_t class_count,
                              std::uint64_t split_seed);

inline SplitIndices stratified_split(const Dataset& ds, std::uint64_t split_seed) {
    return stratified_split(ds.labels, ds.class_count, split_seed);
}

// ---------------------------------------------------------------------------
// Synthetic temporal-order task

struct TemporalConfig {
    std::size_t channels = 16;  // two groups of channels/2
    std::size_t bins = 120;
    std::size_t burst_len = 10;
    double burst_rate = 0.6;
    double background_rate = 0.02;
    std::size_t min_gap = 15;
    std::size_t samples = 1200;

    void validate() const;
};

struct TemporalDataset {
    std::vector<encoding::SpikeRaster> rasters;
    std::vector<std::size_t> labels;
    std::size_t class_count = 2;
    /// Burst onsets of group A and group B per sample.
    std::vector<std::pair<std::size_t, std::size_t>> onsets;

    std::size_t size() const noexcept { return labels.size(); }
};

/// Class 0: group A bursts first; class 1: group B first. Onset pairs are drawn
/// as an unordered pair before assignment, so per-channel counts carry no class signal.
TemporalDataset gen_temporal(const TemporalConfig& cfg, detrng::StreamState& stream);

}  // namespace spikebench::data
