#include "spikebench/data.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>
#include <numeric>
#include <sstream>

#include "spikebench/digest.hpp"

namespace spikebench::data {

namespace {

constexpr std::string_view kDigitsHelp =
    "The 8x8 optical digits set (1797 samples) is not bundled. Either install scikit-learn "
    "(its datasets/data/digits.csv.gz is used as-is) or download the UCI 'Optical Recognition "
    "of Handwritten Digits' test file optdigits.tes from "
    "https://archive.ics.uci.edu/dataset/80 and save it as digits.csv in the data directory "
    "(--data-dir or SPIKEBENCH_DATA_DIR).";

bool has_gz_extension(const std::filesystem::path& path) { return path.extension() == ".gz"; }

std::string read_text(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw DataError("data file not found: " + path.string());
    }
    if (has_gz_extension(path)) {
        std::unique_ptr<gzFile_s, decltype(&gzclose)> gz(gzopen(path.c_str(), "rb"), &gzclose);
        if (!gz) throw DataError("cannot open " + path.string());
        std::string out;
        std::array<char, 1 << 16> buf{};
        int n = 0;
        while ((n = gzread(gz.get(), buf.data(), static_cast<unsigned>(buf.size()))) > 0) {
            out.append(buf.data(), static_cast<std::size_t>(n));
        }
        if (n < 0) throw DataError("corrupt gzip stream in " + path.string());
        return out;
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

long parse_int_cell(std::string_view cell, std::size_t line_no) {
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) {
        cell.remove_suffix(1);
    }
    long v = 0;
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc{} || ptr != cell.data() + cell.size() || cell.empty()) {
        throw DataError("line " + std::to_string(line_no) + ": malformed cell '" +
                        std::string(cell) + "'");
    }
    return v;
}

/// Largest-remainder allocation of `total` across groups proportional to `sizes`.
std::vector<std::size_t> allocate(std::span<const std::size_t> sizes, std::size_t total) {
    const std::size_t pool = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
    std::vector<std::size_t> out(sizes.size(), 0);
    if (pool == 0) return out;
    std::vector<std::pair<std::size_t, std::size_t>> remainders;  // (remainder numerator, group)
    std::size_t assigned = 0;
    for (std::size_t g = 0; g < sizes.size(); ++g) {
        out[g] = sizes[g] * total / pool;
        assigned += out[g];
        remainders.emplace_back(sizes[g] * total % pool, g);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < total && i < remainders.size(); ++i, ++assigned) {
        ++out[remainders[i].second];
    }
    return out;
}

std::size_t ceil_fifth(std::size_t n) { return (n + 4) / 5; }

}  // namespace

Dataset load_csv_generic(const std::filesystem::path& path, std::size_t feature_count,
                         double max_value, std::optional<std::size_t> class_count) {
    if (feature_count == 0) throw DataError("feature_count must be positive");
    if (!(max_value > 0.0)) throw DataError("max_value must be positive");
    const std::string text = read_text(path);

    std::vector<double> values;
    std::vector<std::size_t> labels;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string_view line(text.data() + pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

        std::size_t cells = 0;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = line.find(',', start);
            const auto cell = line.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                                                 : comma - start);
            const long v = parse_int_cell(cell, line_no);
            if (cells < feature_count) {
                if (v < 0 || static_cast<double>(v) > max_value) {
                    throw DataError("line " + std::to_string(line_no) + ": intensity " +
                                    std::to_string(v) + " outside [0," +
                                    std::to_string(static_cast<long>(max_value)) + "]");
                }
                values.push_back(static_cast<double>(v) / max_value);
            } else if (cells == feature_count) {
                if (v < 0) throw DataError("line " + std::to_string(line_no) + ": negative label");
                labels.push_back(static_cast<std::size_t>(v));
            }
            ++cells;
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (cells != feature_count + 1) {
            throw DataError("line " + std::to_string(line_no) + ": expected " +
                            std::to_string(feature_count + 1) + " columns, found " +
                            std::to_string(cells));
        }
    }
    if (labels.empty()) throw DataError("no samples in " + path.string());

    Dataset ds;
    ds.features = Matrix(labels.size(), feature_count);
    std::copy(values.begin(), values.end(), ds.features.data().begin());
    ds.labels = std::move(labels);
    const std::size_t observed = *std::max_element(ds.labels.begin(), ds.labels.end()) + 1;
    ds.class_count = class_count.value_or(observed);
    if (observed > ds.class_count) {
        throw DataError("label " + std::to_string(observed - 1) + " outside " +
                        std::to_string(ds.class_count) + " classes");
    }
    ds.provenance = path.filename().string();
    return ds;
}

Dataset load_digits(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw DataError("digits file not found: " + path.string() + "\n" + std::string(kDigitsHelp));
    }
    Dataset ds = load_csv_generic(path, kDigitsFeatures, kDigitsMaxIntensity, kDigitsClasses);
    std::vector<bool> seen(kDigitsClasses, false);
    for (auto y : ds.labels) seen[y] = true;
    if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) {
        throw DataError("digits file must contain all 10 classes: " + path.string());
    }
    ds.provenance = "digits:" + path.filename().string();
    return ds;
}

std::filesystem::path find_digits_file(const std::filesystem::path& data_dir) {
    for (const char* name : {"digits.csv", "digits.csv.gz"}) {
        const auto candidate = data_dir / name;
        if (std::filesystem::exists(candidate)) return candidate;
    }
    throw DataError("no digits.csv or digits.csv.gz in '" + data_dir.string() + "'.\n" +
                    std::string(kDigitsHelp));
}

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 double max_value) {
    const auto img = read_bytes(images);
    const auto lab = read_bytes(labels);
    auto be32 = [](const std::vector<std::uint8_t>& b, std::size_t off) {
        return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) |
               (std::uint32_t{b[off + 2]} << 8) | std::uint32_t{b[off + 3]};
    };
    auto header = [&](const std::vector<std::uint8_t>& b, const std::filesystem::path& p) {
        if (b.size() < 4 || b[0] != 0 || b[1] != 0 || b[2] != 0x08) {
            throw DataError("not an unsigned-byte IDX file: " + p.string());
        }
        const std::size_t rank = b[3];
        if (b.size() < 4 + 4 * rank) throw DataError("truncated IDX header: " + p.string());
        std::vector<std::size_t> dims(rank);
        for (std::size_t i = 0; i < rank; ++i) dims[i] = be32(b, 4 + 4 * i);
        return dims;
    };
    const auto idims = header(img, images);
    const auto ldims = header(lab, labels);
    if (idims.size() < 2 || ldims.size() != 1) throw DataError("unexpected IDX ranks");
    const std::size_t n = idims[0];
    if (ldims[0] != n) throw DataError("IDX image/label counts differ");
    if (n == 0) throw DataError("no samples in " + images.string());
    std::size_t f = 1;
    for (std::size_t i = 1; i < idims.size(); ++i) f *= idims[i];
    const std::size_t ioff = 4 + 4 * idims.size();
    const std::size_t loff = 8;
    if (img.size() != ioff + n * f || lab.size() != loff + n) throw DataError("IDX payload size mismatch");

    Dataset ds;
    ds.features = Matrix(n, f);
    ds.labels.resize(n);
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t j = 0; j < f; ++j) {
            const double v = img[ioff + s * f + j];
            if (v > max_value) throw DataError("IDX intensity above max_value");
            ds.features(s, j) = v / max_value;
        }
        ds.labels[s] = lab[loff + s];
    }
    ds.class_count = *std::max_element(ds.labels.begin(), ds.labels.end()) + 1;
    ds.provenance = "idx:" + images.filename().string();
    return ds;
}

std::span<const KnownFile> known_files() {
    static constexpr std::array<KnownFile, 2> files{{
        {"digits.csv.gz", "09f66e6debdee2cd2b5ae59e0d6abbb73fc2b0e0185d2e1957e9ebb51e23aa22",
         "scikit-learn bundled digits (gzip)"},
        {"digits.csv", "6ebb3d2fee246a4e99363262ddf8a00a3c41bee6014c373ed9d9216ba7f651b8",
         "scikit-learn digits, decompressed"},
    }};
    return files;
}

ChecksumStatus check_known_file(const std::filesystem::path& path) {
    const auto name = path.filename().string();
    for (const auto& f : known_files()) {
        if (f.name == name) {
            return sha256_file(path) == f.sha256 ? ChecksumStatus::match : ChecksumStatus::mismatch;
        }
    }
    return ChecksumStatus::unknown;
}

SplitIndices stratified_split(std::span<const std::size_t> labels, std::size_t class_count,
                              std::uint64_t split_seed) {
    std::vector<std::vector<std::size_t>> by_class(class_count);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= class_count) throw DataError("label outside class range");
        by_class[labels[i]].push_back(i);
    }
    std::vector<std::size_t> sizes(class_count);
    for (std::size_t c = 0; c < class_count; ++c) {
        if (by_class[c].size() < 5) {
            throw DataError("class " + std::to_string(c) + " has " +
                            std::to_string(by_class[c].size()) + " samples; need at least 5");
        }
        sizes[c] = by_class[c].size();
    }

    const detrng::SeedPath root{{"split", split_seed}};
    for (std::size_t c = 0; c < class_count; ++c) {
        auto stream = root.child("class", c).resolve();
        const auto perm = detrng::shuffle(stream, by_class[c].size());
        std::vector<std::size_t> shuffled(perm.size());
        for (std::size_t i = 0; i < perm.size(); ++i) shuffled[i] = by_class[c][perm[i]];
        by_class[c] = std::move(shuffled);
    }

    const auto test_sizes = allocate(sizes, ceil_fifth(labels.size()));
    std::vector<std::size_t> rest(class_count);
    for (std::size_t c = 0; c < class_count; ++c) rest[c] = sizes[c] - test_sizes[c];
    const auto val_sizes =
        allocate(rest, ceil_fifth(std::accumulate(rest.begin(), rest.end(), std::size_t{0})));

    SplitIndices out;
    for (std::size_t c = 0; c < class_count; ++c) {
        const auto& idx = by_class[c];
        const std::size_t t = test_sizes[c];
        const std::size_t v = val_sizes[c];
        out.test.insert(out.test.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(t));
        out.val.insert(out.val.end(), idx.begin() + static_cast<std::ptrdiff_t>(t),
                       idx.begin() + static_cast<std::ptrdiff_t>(t + v));
        out.train.insert(out.train.end(), idx.begin() + static_cast<std::ptrdiff_t>(t + v), idx.end());
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.val.begin(), out.val.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

void TemporalConfig::validate() const {
    if (channels < 2 || channels % 2 != 0) throw DataError("temporal: channels must be even and >= 2");
    if (burst_len == 0 || burst_len > bins) throw DataError("temporal: burst must fit in the window");
    if (min_gap + burst_len > bins) throw DataError("temporal: two bursts with min_gap do not fit");
    if (!(burst_rate >= 0.0 && burst_rate <= 1.0 && background_rate >= 0.0 && background_rate <= 1.0)) {
        throw DataError("temporal: rates must be probabilities");
    }
    if (samples == 0) throw DataError("temporal: need at least one sample");
}

TemporalDataset gen_temporal(const TemporalConfig& cfg, detrng::StreamState& stream) {
    cfg.validate();
    const std::size_t last_onset = cfg.bins - cfg.burst_len;
    const std::size_t group = cfg.channels / 2;
    auto draw_onset = [&] {
        return static_cast<std::size_t>(stream.next_uniform() * static_cast<double>(last_onset + 1));
    };

    TemporalDataset out;
    out.rasters.reserve(cfg.samples);
    for (std::size_t s = 0; s < cfg.samples; ++s) {
        const std::size_t label = detrng::bernoulli(stream, 0.5) ? 1 : 0;
        std::size_t t1 = 0;
        std::size_t t2 = 0;
        do {
            t1 = draw_onset();
            t2 = draw_onset();
        } while ((t1 > t2 ? t1 - t2 : t2 - t1) < cfg.min_gap);
        const std::size_t early = std::min(t1, t2);
        const std::size_t late = std::max(t1, t2);
        const std::size_t onset_a = label == 0 ? early : late;
        const std::size_t onset_b = label == 0 ? late : early;

        encoding::SpikeRaster raster(cfg.channels, cfg.bins);
        for (std::size_t c = 0; c < cfg.channels; ++c) {
            const std::size_t onset = c < group ? onset_a : onset_b;
            for (std::size_t t = 0; t < cfg.bins; ++t) {
                const bool in_burst = t >= onset && t < onset + cfg.burst_len;
                raster.set(c, t, detrng::bernoulli(stream, in_burst ? cfg.burst_rate : cfg.background_rate));
            }
        }
        out.rasters.push_back(std::move(raster));
        out.labels.push_back(label);
        out.onsets.emplace_back(onset_a, onset_b);
    }
    return out;
}

}  // namespace spikebench::data
