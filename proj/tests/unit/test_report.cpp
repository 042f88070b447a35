#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "spikebench/report.hpp"

using namespace spikebench;
using namespace spikebench::report;
using protocol::RunRecord;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("spikebench_report_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

RunRecord rec(const std::string& experiment, std::uint64_t seed, double acc) {
    RunRecord r;
    r.experiment = experiment;
    r.split_seed = 2026;
    r.model_seed = seed;
    r.accuracy_pct = acc;
    r.macro_f1 = acc / 100.0 - 0.01;
    r.per_class_f1 = {acc / 100.0, 1.0 - acc / 200.0};
    r.spikes_per_sample = 2400.0 + static_cast<double>(seed) / 3.0;
    r.expected_spikes = 2400.0;
    r.epochs = 18;
    r.param_count = 2570;
    return r;
}

const std::vector<std::uint64_t> kNine{11, 23, 37, 41, 53, 67, 79, 83, 97};
const std::vector<std::uint64_t> kFive{11, 23, 37, 41, 53};

std::vector<RunRecord> ablation_records() {
    std::vector<RunRecord> rs;
    for (auto s : kFive) rs.push_back(rec("K=1", s, 80.0 + static_cast<double>(s % 7)));
    for (auto s : kNine) rs.push_back(rec("norm=on", s, 82.0 + static_cast<double>(s % 5)));
    for (auto s : kNine) rs.push_back(rec("norm=off", s, 94.0 + static_cast<double>(s % 3) / 3.0));
    return rs;
}

std::vector<RunRecord> interaction_records() {
    std::vector<RunRecord> rs;
    for (auto s : kNine) {
        rs.push_back(rec("on+signed", s, 82.0 + static_cast<double>(s % 5)));
        rs.push_back(rec("on+pos-only", s, 91.0 + static_cast<double>(s % 2)));
        rs.push_back(rec("off+signed", s, 95.0));
        rs.push_back(rec("off+pos-only", s, 92.0 + static_cast<double>(s % 4) / 4.0));
    }
    return rs;
}

std::size_t count(const std::string& text, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
    return n;
}

void write_raw(const fs::path& out) {
    fs::create_directories(out / "raw");
    write_atomic(out / "raw" / "ablations.csv", records_csv(ablation_records()));
    write_atomic(out / "raw" / "interaction.csv", records_csv(interaction_records()));
}

}  // namespace

TEST_SUITE("report") {

TEST_CASE("fixed6") {
    CHECK(fixed6(1.0) == "1.000000");
    CHECK(fixed6(-0.0) == "0.000000");
    CHECK(fixed6(-1e-9) == "0.000000");
    CHECK(fixed6(2.5e-7) == "0.000000");
    CHECK(fixed6(-2.5) == "-2.500000");
}

TEST_CASE("records csv") {
    auto rs = ablation_records();
    const auto text = records_csv(rs);
    CHECK(text == records_csv(rs));
    std::reverse(rs.begin() + 5, rs.end());
    CHECK(records_csv(rs) != text);  // first-appearance order of experiments changed
    auto back = parse_records(parse_csv(text));
    REQUIRE(back.size() == 23);
    CHECK(back[0].experiment == "K=1");
    CHECK(back[0].model_seed == 11);
    CHECK(back[5].experiment == "norm=on");
    const auto orig = ablation_records();
    for (std::size_t i = 0; i < back.size(); ++i) {
        CHECK(back[i].model_seed == orig[i].model_seed);
        CHECK(std::abs(back[i].accuracy_pct - orig[i].accuracy_pct) < 1e-6);
        CHECK(std::abs(back[i].spikes_per_sample - orig[i].spikes_per_sample) < 1e-6);
        CHECK(back[i].per_class_f1.size() == 2);
        CHECK(back[i].param_count == 2570);
    }

    CHECK_THROWS_AS(records_csv({}), ReportError);
    auto mixed = orig;
    mixed[1].per_class_f1.push_back(0.5);
    CHECK_THROWS_AS(records_csv(mixed), ReportError);
    CHECK_THROWS_AS(parse_csv(""), ReportError);
    CHECK_THROWS_AS(parse_csv("a,b\n1\n"), ReportError);
    const auto t = parse_csv("a,b\n1,x\n");
    CHECK(t.number(0, "a") == 1.0);
    CHECK(t.text(0, "b") == "x");
    CHECK_THROWS_AS(t.column("c"), ReportError);
}

TEST_CASE("tables") {
    TempDir dir("tables");
    CHECK_THROWS_AS(write_tables(dir.path), ReportError);
    CHECK_FALSE(fs::exists(dir.path / "tables" / "tables.md"));

    write_raw(dir.path);
    write_tables(dir.path);
    const auto md = read_file(dir.path / "tables" / "tables.md");
    CHECK(count(md, "†") >= 3);
    CHECK(md.find("Δ pos-only − signed (norm on)") != std::string::npos);
    CHECK(md.find("Δ pos-only − signed (norm off)") != std::string::npos);
    CHECK(md.find("Paired") != std::string::npos);
    const auto tex = read_file(dir.path / "tables" / "tables.tex");
    CHECK(tex.find("$\\Delta$") != std::string::npos);
    CHECK(tex.find("$^\\dagger$") != std::string::npos);
    CHECK(tex.find("†") == std::string::npos);

    auto partial = interaction_records();
    partial.erase(std::remove_if(partial.begin(), partial.end(),
                                 [](const RunRecord& r) { return r.experiment == "off+signed"; }),
                  partial.end());
    write_atomic(dir.path / "raw" / "interaction.csv", records_csv(partial));
    CHECK_THROWS_AS(build_tables(dir.path / "raw"), ReportError);
}

TEST_CASE("svg figures") {
    const std::vector<Series> groups{{"a", {1.0, 2.0, 3.0}}, {"b", {4.0, 5.0, 6.0, 7.0, 8.0}}};
    const auto svg = svg_ablation_bars(groups, "bars");
    CHECK(svg == svg_ablation_bars(groups, "bars"));
    CHECK(count(svg, "<circle") == 8);
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg.find("</svg>") != std::string::npos);
    CHECK_THROWS(svg_ablation_bars({}, "none"));

    const std::vector<Series> lines{{"on", {50.0, 70.0, 80.0}}, {"off", {60.0, 85.0, 95.0}}};
    const auto overlay = svg_trajectory_overlay(lines, "t");
    CHECK(count(overlay, "<polyline") == 2);

    const std::vector<Band> bands{{"on", {{0.98, 0.98}, {0.98, 0.98}}}, {"off", {{1.2, 1.5}, {1.1, 1.7}}}};
    CHECK(svg_norm_bands(bands, "n") == svg_norm_bands(bands, "n"));

    Matrix c(3, 3);
    c(0, 0) = 1.0;
    c(1, 1) = 0.5;
    c(1, 2) = 0.5;
    c(2, 2) = 1.0;
    CHECK(count(svg_confusion(c, "c"), "<rect") >= 9);
}

TEST_CASE("manifest") {
    TempDir dir("manifest");
    write_raw(dir.path);
    Manifest m;
    m.config_digest = "abc";
    m.hardware = "test";
    write_manifest(dir.path, m);
    const auto manifest_path = dir.path / std::string(kManifestName);
    const auto first = read_file(manifest_path);
    CHECK(first.find(std::string(kManifestName)) == std::string::npos);
    CHECK(verify_manifest(manifest_path).ok);

    const auto parsed = parse_manifest(first);
    CHECK(parsed.entries.size() == 2);
    CHECK(parsed.config_digest == "abc");
    CHECK(render_manifest(parsed) == first);

    Manifest later = parsed;
    later.timestamp = "2000-01-01T00:00:00Z";
    CHECK(manifest_identity(render_manifest(later)) == manifest_identity(first));
    later.config_digest = "abd";
    CHECK(manifest_identity(render_manifest(later)) != manifest_identity(first));

    const auto target = dir.path / "raw" / "ablations.csv";
    auto bytes = read_file(target);
    bytes[bytes.size() / 2] ^= 0x01;
    std::ofstream(target, std::ios::binary) << bytes;
    const auto bad = verify_manifest(manifest_path);
    CHECK_FALSE(bad.ok);
    CHECK(bad.mismatched == std::vector<std::string>{"raw/ablations.csv"});

    fs::remove(dir.path / "raw" / "interaction.csv");
    std::ofstream(dir.path / "extra.txt") << "x";
    const auto worse = verify_manifest(manifest_path);
    CHECK(worse.missing == std::vector<std::string>{"raw/interaction.csv"});
    CHECK(worse.unlisted == std::vector<std::string>{"extra.txt"});
}

TEST_CASE("config parsing") {
    protocol::SuiteOptions o;
    apply_config("# comment\nseeds = 1, 2,3\nsigma = 0.3  # trailing\n\nnorm = off\njobs = 4\n", o);
    CHECK(o.seeds == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(o.base.encoder.sigma == 0.3);
    CHECK(o.base.hybrid.schedule.mode == learners::NormMode::off);
    CHECK(o.jobs == 4);

    auto expect_error = [](const std::string& text, const std::string& fragment) {
        protocol::SuiteOptions x;
        try {
            apply_config(text, x);
            FAIL("expected ConfigError for: " << text);
        } catch (const ConfigError& e) {
            CHECK_MESSAGE(std::string(e.what()).find(fragment) != std::string::npos, e.what());
        }
    };
    expect_error("sigma = 0.2\nbogus = 1\n", "line 2");
    expect_error("bogus = 1\n", "unknown key");
    expect_error("k = 2\nk = 3\n", "duplicate");
    expect_error("lr = fast\n", "lr");
    expect_error("k = -1\n", "k");
    expect_error("seeds =\n", "missing value");
    expect_error("norm = sometimes\n", "norm");
    expect_error("just words\n", "key = value");
    expect_error("sigma = 0\n", "invalid configuration");
    expect_error("temporal_channels = 3\n", "invalid configuration");
    expect_error("jobs = 0\n", "jobs");
    expect_error("temporal_windows = 7\n", "temporal_windows");
    CHECK_THROWS_AS(parse_seed_list("1,,2"), ConfigError);
}

}  // TEST_SUITE
