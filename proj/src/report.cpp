#include "spikebench/report.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <system_error>

#include "spikebench/digest.hpp"
#include "spikebench/stats.hpp"

namespace spikebench::report {

namespace fs = std::filesystem;
using protocol::RunRecord;

std::string_view to_string(Family f) noexcept {
    switch (f) {
        case Family::baselines: return "baselines";
        case Family::ablations: return "ablations";
        case Family::interaction: return "interaction";
        case Family::splits: return "splits";
        case Family::temporal: return "temporal";
    }
    return "?";
}

namespace {

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    std::string s(buf);
    // Avoid "-0.00" style output for values that round to zero.
    if (s.size() > 1 && s[0] == '-' && s.find_first_not_of("-0.") == std::string::npos) s.erase(0, 1);
    return s;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_on(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.emplace_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

template <typename T>
bool parse_number(std::string_view text, T& out) {
    const auto t = trim(text);
    if (t.empty()) return false;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    if constexpr (std::is_floating_point_v<T>) {
        if (*first == '+') ++first;
    }
    const auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

}  // namespace

std::string fixed6(double v) { return fmt("%.6f", v); }

void write_atomic(const fs::path& path, std::string_view content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ReportError("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            out.close();
            fs::remove(tmp);
            throw ReportError("write failed for " + path.string());
        }
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ReportError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// CSV

namespace {

void check_label(const std::string& label) {
    if (label.empty() || label.find_first_of(",\"\n\r") != std::string::npos) {
        throw ReportError("experiment label '" + label + "' cannot be written to CSV");
    }
}

std::vector<const RunRecord*> ordered(const std::vector<RunRecord>& records) {
    std::map<std::string, std::size_t> rank;
    for (const auto& r : records) rank.try_emplace(r.experiment, rank.size());
    std::vector<const RunRecord*> out;
    for (const auto& r : records) out.push_back(&r);
    std::stable_sort(out.begin(), out.end(), [&](const RunRecord* a, const RunRecord* b) {
        return std::make_tuple(rank[a->experiment], a->split_seed, a->model_seed) <
               std::make_tuple(rank[b->experiment], b->split_seed, b->model_seed);
    });
    return out;
}

}  // namespace

std::string records_csv(const std::vector<RunRecord>& records) {
    if (records.empty()) throw ReportError("no records to write");
    const std::size_t classes = records.front().per_class_f1.size();
    std::string out =
        "experiment,split_seed,model_seed,accuracy_pct,macro_f1,spikes_per_sample,expected_spikes,"
        "epochs,param_count,sat_low_pct,sat_high_pct,winner_margin";
    for (std::size_t c = 0; c < classes; ++c) out += ",f1_" + std::to_string(c);
    out += '\n';
    for (const RunRecord* r : ordered(records)) {
        check_label(r->experiment);
        if (r->per_class_f1.size() != classes) throw ReportError("records disagree on class count");
        out += r->experiment;
        out += ',' + std::to_string(r->split_seed) + ',' + std::to_string(r->model_seed);
        for (double v : {r->accuracy_pct, r->macro_f1, r->spikes_per_sample, r->expected_spikes}) {
            out += ',' + fixed6(v);
        }
        out += ',' + std::to_string(r->epochs) + ',' + std::to_string(r->param_count);
        for (double v : {r->saturation_low_pct, r->saturation_high_pct, r->winner_margin}) out += ',' + fixed6(v);
        for (double v : r->per_class_f1) out += ',' + fixed6(v);
        out += '\n';
    }
    return out;
}

std::string trajectories_csv(const std::vector<RunRecord>& records) {
    std::string out = "experiment,split_seed,model_seed,epoch,test_accuracy_pct,mean_row_norm\n";
    for (const RunRecord* r : ordered(records)) {
        check_label(r->experiment);
        const auto& t = r->trajectory;
        for (std::size_t e = 0; e < t.test_accuracy_pct.size(); ++e) {
            out += r->experiment + ',' + std::to_string(r->split_seed) + ',' + std::to_string(r->model_seed) + ',' +
                   std::to_string(e + 1) + ',' + fixed6(t.test_accuracy_pct[e]) + ',' + fixed6(t.mean_row_norm[e]) +
                   '\n';
        }
    }
    return out;
}

std::string diagnostics_csv(const protocol::DiagnosticsBundle& d) {
    std::string out = "metric,value\n";
    auto row = [&](std::string_view name, const std::string& v) {
        out.append(name);
        out += ',' + v + '\n';
    };
    row("hybrid_params", std::to_string(d.hybrid_params));
    row("proxy_params", std::to_string(d.proxy_params));
    row("spikes_per_sample_mean", fixed6(d.spikes_per_sample.mean));
    row("spikes_per_sample_std", fixed6(d.spikes_per_sample.std));
    row("spikes_per_sample_n", std::to_string(d.spikes_per_sample.n));
    row("expected_spikes_per_sample", fixed6(d.expected_spikes_per_sample));
    row("sat_low_pct_mean", fixed6(d.saturation_low_pct.mean));
    row("sat_low_pct_std", fixed6(d.saturation_low_pct.std));
    row("sat_high_pct_mean", fixed6(d.saturation_high_pct.mean));
    row("sat_high_pct_std", fixed6(d.saturation_high_pct.std));
    row("winner_margin_mean", fixed6(d.winner_margin.mean));
    row("winner_margin_std", fixed6(d.winner_margin.std));
    row("confusion_seed", std::to_string(d.confusion_seed));
    for (std::size_t c = 0; c < d.per_class_f1_mean.size(); ++c) {
        row("f1_class_" + std::to_string(c), fixed6(d.per_class_f1_mean[c]));
    }
    return out;
}

std::string confusion_csv(const Matrix& confusion) {
    std::string out = "true";
    for (std::size_t c = 0; c < confusion.cols(); ++c) out += ",pred_" + std::to_string(c);
    out += '\n';
    for (std::size_t r = 0; r < confusion.rows(); ++r) {
        out += std::to_string(r);
        for (double v : confusion.row(r)) out += ',' + fixed6(v);
        out += '\n';
    }
    return out;
}

std::string timing_csv(const protocol::TimingReport& t) {
    std::string hw = t.hardware;
    std::replace(hw.begin(), hw.end(), ',', ';');
    std::string out = "model,mode,median_us_per_sample,repeats,batch,hardware\n";
    for (const auto& e : t.entries) {
        out += e.model + ',' + e.mode + ',' + fixed6(e.median_us_per_sample) + ',' + std::to_string(e.repeats) +
               ',' + std::to_string(e.batch) + ',' + hw + '\n';
    }
    return out;
}

std::size_t CsvTable::column(std::string_view name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ReportError("CSV has no column '" + std::string(name) + "'");
    return static_cast<std::size_t>(it - header.begin());
}

const std::string& CsvTable::text(std::size_t row, std::string_view name) const {
    return rows.at(row).at(column(name));
}

double CsvTable::number(std::size_t row, std::string_view name) const {
    double v = 0.0;
    const auto& cell = text(row, name);
    if (!parse_number(cell, v)) {
        throw ReportError("CSV row " + std::to_string(row + 2) + ": '" + cell + "' in column " +
                          std::string(name) + " is not a number");
    }
    return v;
}

CsvTable parse_csv(std::string_view text) {
    CsvTable t;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        auto cells = split_on(line, ',');
        if (t.header.empty()) {
            t.header = std::move(cells);
        } else if (cells.size() != t.header.size()) {
            throw ReportError("CSV line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                              " cells, header has " + std::to_string(t.header.size()));
        } else {
            t.rows.push_back(std::move(cells));
        }
    }
    if (t.header.empty()) throw ReportError("empty CSV");
    return t;
}

CsvTable read_csv(const fs::path& path) {
    try {
        return parse_csv(read_file(path));
    } catch (const ReportError& e) {
        throw ReportError(path.string() + ": " + e.what());
    }
}

namespace {

std::uint64_t as_u64(const CsvTable& t, std::size_t row, std::string_view col) {
    std::uint64_t v = 0;
    if (!parse_number(t.text(row, col), v)) {
        throw ReportError("CSV row " + std::to_string(row + 2) + ": bad integer in column " + std::string(col));
    }
    return v;
}

}  // namespace

std::vector<RunRecord> parse_records(const CsvTable& table) {
    std::size_t classes = 0;
    while (std::find(table.header.begin(), table.header.end(), "f1_" + std::to_string(classes)) !=
           table.header.end()) {
        ++classes;
    }
    std::vector<RunRecord> out;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        RunRecord r;
        r.experiment = table.text(i, "experiment");
        r.split_seed = as_u64(table, i, "split_seed");
        r.model_seed = as_u64(table, i, "model_seed");
        r.accuracy_pct = table.number(i, "accuracy_pct");
        r.macro_f1 = table.number(i, "macro_f1");
        r.spikes_per_sample = table.number(i, "spikes_per_sample");
        r.expected_spikes = table.number(i, "expected_spikes");
        r.epochs = as_u64(table, i, "epochs");
        r.param_count = as_u64(table, i, "param_count");
        r.saturation_low_pct = table.number(i, "sat_low_pct");
        r.saturation_high_pct = table.number(i, "sat_high_pct");
        r.winner_margin = table.number(i, "winner_margin");
        for (std::size_t c = 0; c < classes; ++c) r.per_class_f1.push_back(table.number(i, "f1_" + std::to_string(c)));
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<TrajectoryRow> parse_trajectories(const CsvTable& table) {
    std::vector<TrajectoryRow> out;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        out.push_back({table.text(i, "experiment"), as_u64(table, i, "split_seed"), as_u64(table, i, "model_seed"),
                       as_u64(table, i, "epoch"), table.number(i, "test_accuracy_pct"),
                       table.number(i, "mean_row_norm")});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Tables

namespace {

std::string pm(const stats::Summary& s) { return fmt("%.2f", s.mean) + " ± " + fmt("%.2f", s.std); }

std::string signed2(double v) { return (v >= 0.0 ? "+" : "") + fmt("%.2f", v); }

stats::Summary acc_summary(const std::vector<RunRecord>& records, std::string_view label,
                           std::string_view file) {
    const auto acc = protocol::accuracies(protocol::select(records, label));
    if (acc.empty()) {
        throw ReportError(std::string(file) + " has no rows for experiment '" + std::string(label) + "'");
    }
    return stats::summarize(acc);
}

std::vector<std::string> summary_row(std::string name, const stats::Summary& s) {
    return {std::move(name), std::to_string(s.n), pm(s), fmt("%.2f", s.ci_half)};
}

std::vector<std::string> paired_row(std::string name, const std::vector<RunRecord>& a,
                                    const std::vector<RunRecord>& b) {
    if (a.size() != b.size() || a.empty()) throw ReportError("unpaired comparison: " + name);
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].split_seed != b[i].split_seed || a[i].model_seed != b[i].model_seed) {
            throw ReportError("seed sets differ in comparison: " + name);
        }
    }
    const auto r = stats::paired_compare(protocol::accuracies(a), protocol::accuracies(b));
    return {std::move(name),
            std::to_string(r.n_pairs),
            std::to_string(r.n_nonties),
            signed2(r.mean_diff),
            fmt("%.4f", r.sign_p),
            std::isnan(r.dz) ? std::string("n/a") : fmt("%.2f", r.dz),
            fmt("%.2f", r.cliffs_delta)};
}

const std::map<std::string, std::string, std::less<>>& display_names() {
    static const std::map<std::string, std::string, std::less<>> names{
        {"logreg-pixels", "Pixel softmax"},
        {"logreg-rates", "Encoded-rate softmax"},
        {"hybrid", "Hybrid local readout"},
        {"stdp-proxy", "STDP-style competitive proxy"},
        {"count", "Count readout (timing-agnostic)"},
        {"time-bin", "Time-bin readout (timing-aware)"},
    };
    return names;
}

std::string display(const std::string& label) {
    const auto& n = display_names();
    const auto it = n.find(label);
    return it == n.end() ? label : it->second;
}

std::vector<std::string> labels_in_order(const std::vector<RunRecord>& records) {
    std::vector<std::string> out;
    for (const auto& r : records) {
        if (std::find(out.begin(), out.end(), r.experiment) == out.end()) out.push_back(r.experiment);
    }
    return out;
}

std::optional<std::vector<RunRecord>> load_family(const fs::path& raw, Family f) {
    const auto path = raw / (std::string(to_string(f)) + ".csv");
    if (!fs::exists(path)) return std::nullopt;
    auto recs = parse_records(read_csv(path));
    if (recs.empty()) throw ReportError(path.string() + " has no data rows");
    return recs;
}

const std::vector<std::string> kSummaryHeader{"Condition", "n", "Accuracy (%) mean ± std", "95% CI ±"};
const std::vector<std::string> kPairedHeader{"Comparison", "pairs", "non-ties", "Δ mean (pp)", "sign p",
                                             "Cohen's dz", "Cliff's δ"};

}  // namespace

std::vector<TextTable> build_tables(const fs::path& raw_dir) {
    std::vector<TextTable> tables;
    TextTable paired{"Paired significance checks (seed-matched, two-sided exact sign test)", kPairedHeader, {}, {}};

    if (auto recs = load_family(raw_dir, Family::baselines)) {
        TextTable t{"Baselines (test split)", {"Model", "n", "Accuracy (%) mean ± std", "95% CI ±", "Macro F1"}, {}, {}};
        for (const char* label : {"logreg-pixels", "logreg-rates", "hybrid", "stdp-proxy"}) {
            const auto sel = protocol::select(*recs, label);
            auto row = summary_row(display(label), acc_summary(*recs, label, "baselines.csv"));
            double f1 = 0.0;
            for (const auto& r : sel) f1 += r.macro_f1;
            row.push_back(fmt("%.4f", f1 / static_cast<double>(sel.size())));
            t.rows.push_back(std::move(row));
        }
        tables.push_back(std::move(t));
        paired.rows.push_back(paired_row("hybrid − stdp-proxy", protocol::select(*recs, "hybrid"),
                                         protocol::select(*recs, "stdp-proxy")));
    }

    if (auto recs = load_family(raw_dir, Family::ablations)) {
        TextTable t{"Ablations (hybrid readout, one factor varied from the default)",
                    {"Factor", "Setting", "n", "Accuracy (%) mean ± std", "95% CI ±"}, {}, {}};
        bool any_nine = false;
        std::size_t base_n = 0;
        for (const auto& label : labels_in_order(*recs)) {
            const auto s = acc_summary(*recs, label, "ablations.csv");
            const auto eq = label.find('=');
            std::string factor = eq == std::string::npos ? label : label.substr(0, eq);
            std::string setting = eq == std::string::npos ? "" : label.substr(eq + 1);
            if (s.n == 9) {
                setting += " †";
                any_nine = true;
            } else {
                base_n = s.n;
            }
            t.rows.push_back({factor, setting, std::to_string(s.n), pm(s), fmt("%.2f", s.ci_half)});
        }
        if (any_nine) {
            t.notes.push_back("† rows use n = 9 seeds; other rows use n = " + std::to_string(base_n) + ".");
        }
        t.notes.push_back("norm=on and reward=signed are both the default configuration.");
        tables.push_back(std::move(t));
        if (!protocol::select(*recs, "norm=off").empty() && !protocol::select(*recs, "norm=on").empty()) {
            paired.rows.push_back(paired_row("norm=off − norm=on", protocol::select(*recs, "norm=off"),
                                             protocol::select(*recs, "norm=on")));
        }
    }

    if (auto recs = load_family(raw_dir, Family::interaction)) {
        TextTable t{"Normalization × reward shaping (hybrid readout)", kSummaryHeader, {}, {}};
        for (const char* label : {"on+signed", "on+pos-only", "off+signed", "off+pos-only"}) {
            const std::string l(label);
            const auto plus = l.find('+');
            t.rows.push_back(summary_row("norm " + l.substr(0, plus) + ", reward " + l.substr(plus + 1),
                                         acc_summary(*recs, label, "interaction.csv")));
        }
        const auto d = protocol::interaction_deltas(*recs);
        t.rows.push_back({"Δ pos-only − signed (norm on)", "", signed2(d.delta_norm_on), ""});
        t.rows.push_back({"Δ pos-only − signed (norm off)", "", signed2(d.delta_norm_off), ""});
        t.notes.push_back("Interaction contrast Δ(on) − Δ(off) = " + signed2(d.contrast()) + " pp.");
        tables.push_back(std::move(t));
        paired.rows.push_back(paired_row("pos-only − signed (norm on)", protocol::select(*recs, "on+pos-only"),
                                         protocol::select(*recs, "on+signed")));
        paired.rows.push_back(paired_row("pos-only − signed (norm off)", protocol::select(*recs, "off+pos-only"),
                                         protocol::select(*recs, "off+signed")));
    }

    if (auto recs = load_family(raw_dir, Family::splits)) {
        const auto s = protocol::summarize_splits(*recs);
        TextTable t{"Split robustness (fixed hyperparameters)",
                    {"Split seed", "Default (%)", "Norm off (%)", "Δ (pp)"}, {}, {}};
        for (const auto& row : s.rows) {
            t.rows.push_back({std::to_string(row.split_seed), pm(row.default_acc), pm(row.best_acc), signed2(row.delta)});
        }
        t.rows.push_back({"Across splits", pm(s.across_default), pm(s.across_best),
                          signed2(s.across_delta.mean) + " ± " + fmt("%.2f", s.across_delta.std)});
        t.notes.push_back("Δ > 0 in " + std::to_string(s.positive_splits) + "/" + std::to_string(s.rows.size()) +
                          " splits; n = " + std::to_string(s.rows.front().default_acc.n) + " model seeds per split.");
        tables.push_back(std::move(t));
        paired.rows.push_back(paired_row("norm-off − default (all splits)", protocol::select(*recs, "norm-off"),
                                         protocol::select(*recs, "default")));
    }

    if (auto recs = load_family(raw_dir, Family::temporal)) {
        TextTable t{"Synthetic temporal-order task", kSummaryHeader, {}, {}};
        const auto count = acc_summary(*recs, "count", "temporal.csv");
        const auto timebin = acc_summary(*recs, "time-bin", "temporal.csv");
        t.rows.push_back(summary_row(display("count"), count));
        t.rows.push_back(summary_row(display("time-bin"), timebin));
        t.notes.push_back("Time-bin minus count: " + signed2(timebin.mean - count.mean) + " pp; chance is 50%.");
        tables.push_back(std::move(t));
        paired.rows.push_back(paired_row("time-bin − count", protocol::select(*recs, "time-bin"),
                                         protocol::select(*recs, "count")));
    }

    if (tables.empty()) throw ReportError("no result CSVs under " + raw_dir.string());

    if (fs::exists(raw_dir / "diagnostics.csv")) {
        const auto csv = read_csv(raw_dir / "diagnostics.csv");
        std::map<std::string, std::string, std::less<>> m;
        for (const auto& row : csv.rows) m[row.at(0)] = row.at(1);
        auto get = [&](std::string_view key) -> const std::string& {
            const auto it = m.find(key);
            if (it == m.end()) throw ReportError("diagnostics.csv lacks '" + std::string(key) + "'");
            return it->second;
        };
        auto num = [&](std::string_view key) {
            double v = 0.0;
            if (!parse_number(get(key), v)) throw ReportError("diagnostics.csv: bad value for " + std::string(key));
            return v;
        };
        TextTable t{"Additional SNN diagnostics", {"Metric", "Value"}, {}, {}};
        t.rows.push_back({"Spikes per sample (hybrid, test)",
                          fmt("%.1f", num("spikes_per_sample_mean")) + " ± " + fmt("%.1f", num("spikes_per_sample_std"))});
        t.rows.push_back({"Expected spikes per sample (analytic)", fmt("%.1f", num("expected_spikes_per_sample"))});
        t.rows.push_back({"Proxy weights at lower bound (%)",
                          fmt("%.2f", num("sat_low_pct_mean")) + " ± " + fmt("%.2f", num("sat_low_pct_std"))});
        t.rows.push_back({"Proxy weights at upper bound (%)",
                          fmt("%.2f", num("sat_high_pct_mean")) + " ± " + fmt("%.2f", num("sat_high_pct_std"))});
        t.rows.push_back({"Proxy winner margin",
                          fmt("%.4f", num("winner_margin_mean")) + " ± " + fmt("%.4f", num("winner_margin_std"))});
        t.rows.push_back({"Hybrid parameter count", get("hybrid_params")});
        t.rows.push_back({"Proxy parameter count", get("proxy_params")});
        std::string f1;
        for (std::size_t c = 0; m.count("f1_class_" + std::to_string(c)) != 0; ++c) {
            if (!f1.empty()) f1 += ' ';
            f1 += std::to_string(c) + ":" + fmt("%.3f", num("f1_class_" + std::to_string(c)));
        }
        if (!f1.empty()) t.rows.push_back({"Hybrid per-class F1 (seed mean)", f1});
        t.notes.push_back("Confusion matrix and models use model seed " + get("confusion_seed") + ".");
        tables.push_back(std::move(t));
    }

    if (fs::exists(raw_dir / "timing.csv")) {
        const auto csv = read_csv(raw_dir / "timing.csv");
        TextTable t{"Amortized inference time", {"Model", "Mode", "Median µs/sample", "Repeats", "Batch"}, {}, {}};
        for (std::size_t i = 0; i < csv.rows.size(); ++i) {
            t.rows.push_back({csv.text(i, "model"), csv.text(i, "mode"), fmt("%.3f", csv.number(i, "median_us_per_sample")),
                              csv.text(i, "repeats"), csv.text(i, "batch")});
        }
        if (!csv.rows.empty()) t.notes.push_back("Hardware: " + csv.text(0, "hardware") + ".");
        tables.push_back(std::move(t));
    }

    if (!paired.rows.empty()) {
        paired.notes.push_back("Differences are first minus second; exact zeros are dropped before the sign test.");
        tables.push_back(std::move(paired));
    }
    return tables;
}

std::string render_markdown(const std::vector<TextTable>& tables) {
    std::string out;
    for (const auto& t : tables) {
        if (!out.empty()) out += '\n';
        out += "## " + t.title + "\n\n|";
        for (const auto& h : t.header) out += ' ' + h + " |";
        out += "\n|";
        for (std::size_t i = 0; i < t.header.size(); ++i) out += i == 0 ? " --- |" : " ---: |";
        out += '\n';
        for (const auto& row : t.rows) {
            out += '|';
            for (const auto& c : row) out += ' ' + c + " |";
            out += '\n';
        }
        if (!t.notes.empty()) {
            out += '\n';
            for (const auto& n : t.notes) out += n + "\n";
        }
    }
    return out;
}

namespace {

std::string latex_escape(std::string_view s) {
    static const std::vector<std::pair<std::string_view, std::string_view>> subs{
        {"±", "$\\pm$"}, {"Δ", "$\\Delta$"}, {"δ", "$\\delta$"}, {"−", "$-$"}, {"×", "$\\times$"},
        {"†", "$^\\dagger$"}, {"µ", "$\\mu$"},
    };
    std::string out;
    for (std::size_t i = 0; i < s.size();) {
        bool replaced = false;
        for (const auto& [from, to] : subs) {
            if (s.substr(i, from.size()) == from) {
                out += to;
                i += from.size();
                replaced = true;
                break;
            }
        }
        if (replaced) continue;
        const char c = s[i++];
        switch (c) {
            case '%': case '&': case '#': case '_': case '{': case '}': case '$':
                out += '\\';
                out += c;
                break;
            case '~': out += "\\textasciitilde{}"; break;
            case '^': out += "\\textasciicircum{}"; break;
            case '\\': out += "\\textbackslash{}"; break;
            case '>': out += "$>$"; break;
            case '<': out += "$<$"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string render_latex(const std::vector<TextTable>& tables) {
    std::string out;
    for (const auto& t : tables) {
        if (!out.empty()) out += '\n';
        out += "% " + t.title + "\n\\begin{table}[t]\n\\centering\n\\caption{" + latex_escape(t.title) +
               "}\n\\begin{tabular}{l";
        out += std::string(t.header.size() - 1, 'r');
        out += "}\n\\hline\n";
        for (std::size_t i = 0; i < t.header.size(); ++i) {
            out += (i ? " & " : "") + latex_escape(t.header[i]);
        }
        out += " \\\\\n\\hline\n";
        for (const auto& row : t.rows) {
            for (std::size_t i = 0; i < row.size(); ++i) out += (i ? " & " : "") + latex_escape(row[i]);
            out += " \\\\\n";
        }
        out += "\\hline\n\\end{tabular}\n";
        for (const auto& n : t.notes) out += "\\par\\footnotesize " + latex_escape(n) + "\n";
        out += "\\end{table}\n";
    }
    return out;
}

void write_tables(const fs::path& out_dir) {
    const auto tables = build_tables(out_dir / "raw");
    const auto md = render_markdown(tables);
    const auto tex = render_latex(tables);
    write_atomic(out_dir / "tables" / "tables.md", md);
    write_atomic(out_dir / "tables" / "tables.tex", tex);
}

// ---------------------------------------------------------------------------
// SVG

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 64.0;
constexpr double kRight = 150.0;
constexpr double kTop = 40.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

std::string c2(double v) { return fmt("%.2f", v); }

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Axis {
    double lo = 0.0;
    double hi = 1.0;
    double step = 0.2;
};

Axis nice_axis(double lo, double hi) {
    if (!(hi > lo)) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double raw = (hi - lo) / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        if (m * mag >= raw) {
            step = m * mag;
            break;
        }
    }
    return {std::floor(lo / step) * step, std::ceil(hi / step) * step, step};
}

class Plot {
public:
    Plot(std::string_view title, Axis x, Axis y, std::string_view xlabel, std::string_view ylabel,
         double bottom = 56.0)
        : x_(x), y_(y), bottom_(bottom) {
        out_ = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
               "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + c2(kWidth) +
               "\" height=\"" + c2(kHeight) + "\" viewBox=\"0 0 " + c2(kWidth) + " " + c2(kHeight) +
               "\" font-family=\"sans-serif\" font-size=\"12\">\n"
               "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        text(kWidth / 2.0, 22.0, title, "middle", 14);
        const double x0 = kLeft;
        const double x1 = kWidth - kRight;
        const double y0 = kHeight - bottom_;
        const double y1 = kTop;
        for (double v = y_.lo; v <= y_.hi + 1e-9 * y_.step; v += y_.step) {
            const double yv = py(v);
            line(x0, yv, x1, yv, "#dddddd");
            text(x0 - 6.0, yv + 4.0, tick(v, y_.step), "end", 11);
        }
        line(x0, y0, x1, y0, "black");
        line(x0, y0, x0, y1, "black");
        text((x0 + x1) / 2.0, kHeight - 14.0, xlabel, "middle", 12);
        out_ += "<text x=\"16\" y=\"" + c2((y0 + y1) / 2.0) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
                c2((y0 + y1) / 2.0) + ")\">" + xml_escape(ylabel) + "</text>\n";
    }

    double px(double v) const { return kLeft + (v - x_.lo) / (x_.hi - x_.lo) * (kWidth - kRight - kLeft); }
    double py(double v) const { return kHeight - bottom_ - (v - y_.lo) / (y_.hi - y_.lo) * (kHeight - bottom_ - kTop); }

    void x_tick(double v, std::string_view label) {
        line(px(v), kHeight - bottom_, px(v), kHeight - bottom_ + 4.0, "black");
        text(px(v), kHeight - bottom_ + 17.0, label, "middle", 11);
    }

    void line(double x1, double y1, double x2, double y2, std::string_view stroke) {
        out_ += "<line x1=\"" + c2(x1) + "\" y1=\"" + c2(y1) + "\" x2=\"" + c2(x2) + "\" y2=\"" + c2(y2) +
                "\" stroke=\"" + std::string(stroke) + "\" stroke-width=\"1\"/>\n";
    }

    void text(double x, double y, std::string_view s, std::string_view anchor, int size,
              std::string_view extra = {}) {
        out_ += "<text x=\"" + c2(x) + "\" y=\"" + c2(y) + "\" text-anchor=\"" + std::string(anchor) +
                "\" font-size=\"" + std::to_string(size) + "\"" + (extra.empty() ? "" : " " + std::string(extra)) +
                ">" + xml_escape(s) + "</text>\n";
    }

    void polyline(const std::vector<std::pair<double, double>>& pts, std::string_view color) {
        out_ += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i) {
            out_ += (i ? " " : "") + c2(px(pts[i].first)) + "," + c2(py(pts[i].second));
        }
        out_ += "\"/>\n";
    }

    void polygon(const std::vector<std::pair<double, double>>& pts, std::string_view color, double opacity) {
        out_ += "<polygon fill=\"" + std::string(color) + "\" fill-opacity=\"" + c2(opacity) +
                "\" stroke=\"none\" points=\"";
        for (std::size_t i = 0; i < pts.size(); ++i) {
            out_ += (i ? " " : "") + c2(px(pts[i].first)) + "," + c2(py(pts[i].second));
        }
        out_ += "\"/>\n";
    }

    void raw(std::string_view s) { out_ += s; }

    void legend(std::size_t i, std::string_view label, std::string_view color) {
        const double x = kWidth - kRight + 14.0;
        const double y = kTop + 10.0 + 20.0 * static_cast<double>(i);
        out_ += "<rect x=\"" + c2(x) + "\" y=\"" + c2(y - 9.0) + "\" width=\"14\" height=\"10\" fill=\"" +
                std::string(color) + "\"/>\n";
        text(x + 20.0, y, label, "start", 11);
    }

    std::string finish() {
        out_ += "</svg>\n";
        return std::move(out_);
    }

private:
    static std::string tick(double v, double step) {
        const int decimals = step >= 1.0 ? 0 : static_cast<int>(std::ceil(-std::log10(step) - 1e-9));
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.*f", decimals, std::abs(v) < 1e-12 ? 0.0 : v);
        return buf;
    }

    Axis x_;
    Axis y_;
    double bottom_;
    std::string out_;
};

void require(bool ok, std::string_view what) {
    if (!ok) throw ReportError(std::string(what));
}

}  // namespace

std::string svg_trajectory_overlay(const std::vector<Series>& series, std::string_view title) {
    require(!series.empty(), "trajectory plot: no series");
    std::size_t epochs = 0;
    double lo = 100.0;
    double hi = 0.0;
    for (const auto& s : series) {
        require(!s.values.empty(), "trajectory plot: empty series " + s.label);
        epochs = std::max(epochs, s.values.size());
        for (double v : s.values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    Plot p(title, {1.0, static_cast<double>(std::max<std::size_t>(epochs, 2)), 1.0},
           nice_axis(std::max(0.0, lo - 2.0), std::min(100.0, hi + 2.0)), "epoch", "test accuracy (%)");
    for (std::size_t e = 1; e <= epochs; ++e) {
        if (e == 1 || e % 3 == 0) p.x_tick(static_cast<double>(e), std::to_string(e));
    }
    for (std::size_t i = 0; i < series.size(); ++i) {
        std::vector<std::pair<double, double>> pts;
        for (std::size_t e = 0; e < series[i].values.size(); ++e) {
            pts.emplace_back(static_cast<double>(e + 1), series[i].values[e]);
        }
        const char* color = kPalette[i % std::size(kPalette)];
        p.polyline(pts, color);
        p.legend(i, series[i].label, color);
    }
    return p.finish();
}

std::string svg_ablation_bars(const std::vector<Series>& groups, std::string_view title) {
    require(!groups.empty(), "bar plot: no groups");
    double lo = 100.0;
    double hi = 0.0;
    for (const auto& g : groups) {
        require(!g.values.empty(), "bar plot: empty group " + g.label);
        for (double v : g.values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    const double n = static_cast<double>(groups.size());
    const Axis y = nice_axis(std::max(0.0, lo - 5.0), std::min(100.0, hi + 2.0));
    Plot p(title, {0.0, n, 1.0}, y, "", "test accuracy (%)", 100.0);
    const double bar_w = (kWidth - kRight - kLeft) / n * 0.6;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        const auto& g = groups[i];
        const double mean = stats::summarize(g.values).mean;
        const double cx = p.px(static_cast<double>(i) + 0.5);
        const double top = p.py(mean);
        p.raw("<rect x=\"" + c2(cx - bar_w / 2.0) + "\" y=\"" + c2(top) + "\" width=\"" + c2(bar_w) +
              "\" height=\"" + c2(p.py(y.lo) - top) + "\" fill=\"#9ecae1\" stroke=\"#3182bd\"/>\n");
        const double k = static_cast<double>(g.values.size());
        for (std::size_t j = 0; j < g.values.size(); ++j) {
            const double off = k > 1 ? (static_cast<double>(j) / (k - 1) - 0.5) * bar_w * 0.6 : 0.0;
            p.raw("<circle cx=\"" + c2(cx + off) + "\" cy=\"" + c2(p.py(g.values[j])) +
                  "\" r=\"3\" fill=\"#08306b\"/>\n");
        }
        const double ly = p.py(y.lo) + 14.0;
        p.text(cx, ly, g.label, "end", 10, "transform=\"rotate(-35 " + c2(cx) + " " + c2(ly) + ")\"");
    }
    p.legend(0, "seed mean", "#9ecae1");
    p.legend(1, "single seed", "#08306b");
    return p.finish();
}

std::string svg_norm_bands(const std::vector<Band>& bands, std::string_view title) {
    require(!bands.empty(), "band plot: no schedules");
    std::size_t epochs = 0;
    double hi = 0.0;
    struct Stat {
        std::vector<double> mean;
        std::vector<double> std;
    };
    std::vector<Stat> stat;
    for (const auto& b : bands) {
        require(!b.runs.empty(), "band plot: no runs for " + b.label);
        const std::size_t len = b.runs.front().size();
        for (const auto& r : b.runs) require(r.size() == len && len > 0, "band plot: ragged runs for " + b.label);
        epochs = std::max(epochs, len);
        Stat s;
        for (std::size_t e = 0; e < len; ++e) {
            std::vector<double> col;
            for (const auto& r : b.runs) col.push_back(r[e]);
            const auto sum = stats::summarize(col);
            s.mean.push_back(sum.mean);
            s.std.push_back(sum.std);
            hi = std::max(hi, sum.mean + sum.std);
        }
        stat.push_back(std::move(s));
    }
    Plot p(title, {1.0, static_cast<double>(std::max<std::size_t>(epochs, 2)), 1.0}, nice_axis(0.0, hi * 1.05),
           "epoch", "mean class-row L2 norm");
    for (std::size_t e = 1; e <= epochs; ++e) {
        if (e == 1 || e % 5 == 0) p.x_tick(static_cast<double>(e), std::to_string(e));
    }
    for (std::size_t i = 0; i < bands.size(); ++i) {
        const char* color = kPalette[i % std::size(kPalette)];
        std::vector<std::pair<double, double>> poly;
        std::vector<std::pair<double, double>> line;
        const auto& s = stat[i];
        for (std::size_t e = 0; e < s.mean.size(); ++e) {
            poly.emplace_back(static_cast<double>(e + 1), s.mean[e] + s.std[e]);
            line.emplace_back(static_cast<double>(e + 1), s.mean[e]);
        }
        for (std::size_t e = s.mean.size(); e-- > 0;) {
            poly.emplace_back(static_cast<double>(e + 1), std::max(0.0, s.mean[e] - s.std[e]));
        }
        p.polygon(poly, color, 0.2);
        p.polyline(line, color);
        p.legend(i, bands[i].label + " (n=" + std::to_string(bands[i].runs.size()) + ")", color);
    }
    return p.finish();
}

std::string svg_confusion(const Matrix& confusion, std::string_view title) {
    require(confusion.rows() > 0 && confusion.rows() == confusion.cols(), "confusion plot: need a square matrix");
    const std::size_t n = confusion.rows();
    const double size = 32.0;
    const double x0 = 70.0;
    const double y0 = 50.0;
    const double w = x0 + size * static_cast<double>(n) + 30.0;
    const double h = y0 + size * static_cast<double>(n) + 50.0;
    std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
                      "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + c2(w) + "\" height=\"" +
                      c2(h) + "\" viewBox=\"0 0 " + c2(w) + " " + c2(h) +
                      "\" font-family=\"sans-serif\" font-size=\"10\">\n"
                      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out += "<text x=\"" + c2(w / 2.0) + "\" y=\"22.00\" text-anchor=\"middle\" font-size=\"14\">" +
           xml_escape(title) + "</text>\n";
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            const double v = std::clamp(confusion(r, c), 0.0, 1.0);
            const int shade = static_cast<int>(std::lround(255.0 * (1.0 - v)));
            char color[16];
            std::snprintf(color, sizeof color, "#%02x%02x%02x", shade, shade, 255);
            const double x = x0 + size * static_cast<double>(c);
            const double y = y0 + size * static_cast<double>(r);
            out += "<rect x=\"" + c2(x) + "\" y=\"" + c2(y) + "\" width=\"" + c2(size) + "\" height=\"" + c2(size) +
                   "\" fill=\"" + color + "\" stroke=\"#cccccc\"/>\n";
            out += "<text x=\"" + c2(x + size / 2.0) + "\" y=\"" + c2(y + size / 2.0 + 3.5) +
                   "\" text-anchor=\"middle\" fill=\"" + (v > 0.5 ? "white" : "black") + "\">" + fmt("%.2f", v) +
                   "</text>\n";
        }
        out += "<text x=\"" + c2(x0 - 6.0) + "\" y=\"" + c2(y0 + size * (static_cast<double>(r) + 0.5) + 3.5) +
               "\" text-anchor=\"end\">" + std::to_string(r) + "</text>\n";
        out += "<text x=\"" + c2(x0 + size * (static_cast<double>(r) + 0.5)) + "\" y=\"" +
               c2(y0 + size * static_cast<double>(n) + 14.0) + "\" text-anchor=\"middle\">" + std::to_string(r) +
               "</text>\n";
    }
    out += "<text x=\"" + c2(x0 + size * static_cast<double>(n) / 2.0) + "\" y=\"" + c2(h - 12.0) +
           "\" text-anchor=\"middle\" font-size=\"12\">predicted class</text>\n";
    out += "<text x=\"18\" y=\"" + c2(y0 + size * static_cast<double>(n) / 2.0) +
           "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 18 " +
           c2(y0 + size * static_cast<double>(n) / 2.0) + ")\">true class</text>\n";
    out += "</svg>\n";
    return out;
}

namespace {

std::vector<std::vector<double>> runs_of(const std::vector<TrajectoryRow>& rows, std::string_view label,
                                         bool accuracy, std::optional<std::uint64_t> seed = std::nullopt) {
    std::map<std::pair<std::uint64_t, std::uint64_t>, std::vector<std::pair<std::size_t, double>>> by_run;
    for (const auto& r : rows) {
        if (r.experiment != label || (seed && r.model_seed != *seed)) continue;
        by_run[{r.split_seed, r.model_seed}].emplace_back(r.epoch, accuracy ? r.test_accuracy_pct : r.mean_row_norm);
    }
    std::vector<std::vector<double>> out;
    for (auto& [key, pts] : by_run) {
        std::sort(pts.begin(), pts.end());
        std::vector<double> v;
        for (const auto& [e, x] : pts) v.push_back(x);
        out.push_back(std::move(v));
    }
    return out;
}

}  // namespace

std::vector<std::string> write_figures(const fs::path& out_dir) {
    const fs::path raw = out_dir / "raw";
    const fs::path fig = out_dir / "figures";
    std::vector<std::string> written;

    if (fs::exists(raw / "ablations_trajectories.csv")) {
        const auto rows = parse_trajectories(read_csv(raw / "ablations_trajectories.csv"));
        std::set<std::uint64_t> seeds;
        for (const auto& r : rows) {
            if (r.experiment == "norm=on") seeds.insert(r.model_seed);
        }
        if (!seeds.empty()) {
            const std::uint64_t seed = seeds.count(protocol::kRepresentativeSeed) ? protocol::kRepresentativeSeed
                                                                                  : *seeds.begin();
            const auto on = runs_of(rows, "norm=on", true, seed);
            const auto off = runs_of(rows, "norm=off", true, seed);
            if (!on.empty() && !off.empty()) {
                write_atomic(fig / "trajectory_overlay.svg",
                             svg_trajectory_overlay({{"norm on", on.front()}, {"norm off", off.front()}},
                                                    "Test accuracy per epoch, model seed " + std::to_string(seed)));
                written.push_back("trajectory_overlay.svg");
            }
        }
        std::vector<Band> bands;
        for (const char* mode : {"on", "gentle", "off"}) {
            auto runs = runs_of(rows, std::string("norm=") + mode, false);
            if (!runs.empty()) bands.push_back({std::string("norm ") + mode, std::move(runs)});
        }
        if (!bands.empty()) {
            write_atomic(fig / "norm_schedules.svg", svg_norm_bands(bands, "Mean class-row norm by schedule"));
            written.push_back("norm_schedules.svg");
        }
    }

    if (fs::exists(raw / "ablations.csv")) {
        const auto recs = parse_records(read_csv(raw / "ablations.csv"));
        std::vector<Series> groups;
        for (const auto& label : labels_in_order(recs)) {
            groups.push_back({label, protocol::accuracies(protocol::select(recs, label))});
        }
        if (!groups.empty()) {
            write_atomic(fig / "ablation_bars.svg", svg_ablation_bars(groups, "Ablations: seed mean and single seeds"));
            written.push_back("ablation_bars.svg");
        }
    }

    if (fs::exists(raw / "confusion.csv")) {
        const auto csv = read_csv(raw / "confusion.csv");
        const std::size_t n = csv.rows.size();
        Matrix m(n, n);
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < n; ++c) m(r, c) = csv.number(r, "pred_" + std::to_string(c));
        }
        std::string title = "Normalized confusion matrix (hybrid)";
        if (fs::exists(raw / "diagnostics.csv")) {
            const auto d = read_csv(raw / "diagnostics.csv");
            for (const auto& row : d.rows) {
                if (row.at(0) == "confusion_seed") title += ", model seed " + row.at(1);
            }
        }
        write_atomic(fig / "confusion.svg", svg_confusion(m, title));
        written.push_back("confusion.svg");
    }
    return written;
}

// ---------------------------------------------------------------------------
// Manifest

Manifest scan_directory(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw ReportError(dir.string() + " is not a directory");
    Manifest m;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const auto rel = fs::relative(entry.path(), dir).generic_string();
        if (rel == kManifestName || entry.path().extension() == ".tmp") continue;
        m.entries.push_back({rel, entry.file_size(), sha256_file(entry.path())});
    }
    std::sort(m.entries.begin(), m.entries.end(),
              [](const ManifestEntry& a, const ManifestEntry& b) { return a.path < b.path; });
    return m;
}

std::string render_manifest(const Manifest& m) {
    std::string out;
    out += "# tool_version: " + m.tool_version + "\n";
    out += "# config_digest: " + m.config_digest + "\n";
    out += "# hardware: " + m.hardware + "\n";
    out += "# timestamp: " + m.timestamp + "\n";
    for (const auto& e : m.entries) {
        out += e.path + "  " + std::to_string(e.size) + "  " + e.sha256 + "\n";
    }
    return out;
}

Manifest parse_manifest(std::string_view text) {
    Manifest m;
    m.tool_version.clear();
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        if (line.rfind("# ", 0) == 0) {
            const auto colon = line.find(':');
            if (colon == std::string::npos) continue;
            const auto key = trim(std::string_view(line).substr(2, colon - 2));
            const auto value = trim(std::string_view(line).substr(colon + 1));
            if (key == "tool_version") m.tool_version = value;
            else if (key == "config_digest") m.config_digest = value;
            else if (key == "hardware") m.hardware = value;
            else if (key == "timestamp") m.timestamp = value;
            continue;
        }
        const auto last = line.find_last_of(' ');
        const auto mid = last == std::string::npos ? std::string::npos : line.find_last_not_of(' ', last);
        const auto mid_sp = mid == std::string::npos ? std::string::npos : line.find_last_of(' ', mid);
        ManifestEntry e;
        if (mid_sp == std::string::npos || !parse_number(line.substr(mid_sp + 1, mid - mid_sp), e.size)) {
            throw ReportError("manifest line " + std::to_string(line_no) + " is malformed");
        }
        e.sha256 = line.substr(last + 1);
        e.path = trim(std::string_view(line).substr(0, mid_sp));
        if (e.path.empty() || e.sha256.size() != 64) {
            throw ReportError("manifest line " + std::to_string(line_no) + " is malformed");
        }
        m.entries.push_back(std::move(e));
    }
    return m;
}

std::string manifest_identity(std::string_view text) {
    std::string out;
    std::istringstream in{std::string(text)};
    for (std::string line; std::getline(in, line);) {
        if (line.rfind("# timestamp:", 0) == 0) continue;
        out += line + "\n";
    }
    return out;
}

void write_manifest(const fs::path& dir, Manifest m) {
    const auto scanned = scan_directory(dir);
    m.entries = scanned.entries;
    if (m.timestamp.empty()) {
        const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::tm tm{};
        gmtime_r(&now, &tm);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
        m.timestamp = buf;
    }
    write_atomic(dir / kManifestName, render_manifest(m));
}

VerifyResult verify_manifest(const fs::path& manifest_path) {
    const auto m = parse_manifest(read_file(manifest_path));
    const fs::path dir = manifest_path.has_parent_path() ? manifest_path.parent_path() : fs::path(".");
    VerifyResult r;
    std::set<std::string> listed;
    for (const auto& e : m.entries) {
        listed.insert(e.path);
        const fs::path p = dir / e.path;
        if (!fs::is_regular_file(p)) {
            r.missing.push_back(e.path);
            continue;
        }
        if (fs::file_size(p) != e.size || sha256_file(p) != e.sha256) r.mismatched.push_back(e.path);
    }
    for (const auto& e : scan_directory(dir).entries) {
        if (!listed.count(e.path)) r.unlisted.push_back(e.path);
    }
    r.ok = r.mismatched.empty() && r.missing.empty() && r.unlisted.empty();
    return r;
}

// ---------------------------------------------------------------------------
// Config

std::vector<std::uint64_t> parse_seed_list(std::string_view text) {
    std::vector<std::uint64_t> out;
    for (const auto& part : split_on(text, ',')) {
        std::uint64_t v = 0;
        if (!parse_number(part, v)) throw ConfigError("bad seed '" + trim(part) + "' in list '" + std::string(text) + "'");
        out.push_back(v);
    }
    if (out.empty()) throw ConfigError("empty seed list");
    return out;
}

void apply_config(std::string_view text, protocol::SuiteOptions& options) {
    auto& b = options.base;
    using Setter = std::function<void(const std::string&)>;
    auto size_field = [](std::size_t& f) {
        return Setter([&f](const std::string& v) {
            if (!parse_number(v, f)) throw ConfigError("expected a non-negative integer, got '" + v + "'");
        });
    };
    auto real_field = [](double& f) {
        return Setter([&f](const std::string& v) {
            if (!parse_number(v, f) || !std::isfinite(f)) throw ConfigError("expected a number, got '" + v + "'");
        });
    };
    const std::map<std::string, Setter, std::less<>> setters{
        {"seeds", [&](const std::string& v) { options.seeds = parse_seed_list(v); }},
        {"seeds_extended", [&](const std::string& v) { options.seeds_extended = parse_seed_list(v); }},
        {"split_seed", [&](const std::string& v) {
             if (!parse_number(v, options.split_seed)) throw ConfigError("bad split seed '" + v + "'");
         }},
        {"split_seeds", [&](const std::string& v) { options.robustness_split_seeds = parse_seed_list(v); }},
        {"jobs", size_field(options.jobs)},
        {"k", size_field(b.encoder.neurons_per_feature)},
        {"sigma", real_field(b.encoder.sigma)},
        {"lambda_max", real_field(b.encoder.lambda_max)},
        {"dt", real_field(b.encoder.dt)},
        {"window_bins", size_field(b.encoder.window_bins)},
        {"epochs", size_field(b.hybrid.epochs)},
        {"lr", real_field(b.hybrid.lr)},
        {"shaping", [&](const std::string& v) { b.hybrid.shaping = learners::parse_shaping(v); }},
        {"norm", [&](const std::string& v) {
             b.hybrid.schedule = learners::NormSchedule::from_mode(learners::parse_norm_mode(v));
         }},
        {"proxy_neurons", size_field(b.proxy.neurons)},
        {"proxy_epochs", size_field(b.proxy.epochs)},
        {"eta_plus", real_field(b.proxy.eta_plus)},
        {"eta_minus", real_field(b.proxy.eta_minus)},
        {"proxy_w_min", real_field(b.proxy.w_min)},
        {"proxy_w_max", real_field(b.proxy.w_max)},
        {"delta_theta", real_field(b.proxy.delta_theta)},
        {"rho", real_field(b.proxy.rho)},
        {"proxy_shaping", [&](const std::string& v) { b.proxy.shaping = learners::parse_shaping(v); }},
        {"softmax_epochs", size_field(b.softmax.epochs)},
        {"softmax_lr", real_field(b.softmax.lr)},
        {"temporal_channels", size_field(b.temporal.channels)},
        {"temporal_bins", size_field(b.temporal.bins)},
        {"temporal_burst_len", size_field(b.temporal.burst_len)},
        {"temporal_burst_rate", real_field(b.temporal.burst_rate)},
        {"temporal_background_rate", real_field(b.temporal.background_rate)},
        {"temporal_min_gap", size_field(b.temporal.min_gap)},
        {"temporal_samples", size_field(b.temporal.samples)},
        {"temporal_windows", size_field(b.temporal_windows)},
    };

    std::set<std::string> seen;
    std::size_t line_no = 0;
    for (const auto& raw_line : split_on(text, '\n')) {
        ++line_no;
        std::string_view line = raw_line;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        if (trim(line).empty()) continue;
        const auto where = "config line " + std::to_string(line_no) + ": ";
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(where + "expected 'key = value'");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        const auto it = setters.find(key);
        if (it == setters.end()) throw ConfigError(where + "unknown key '" + key + "'");
        if (!seen.insert(key).second) throw ConfigError(where + "duplicate key '" + key + "'");
        if (value.empty()) throw ConfigError(where + "missing value for '" + key + "'");
        try {
            it->second(value);
        } catch (const ConfigError& e) {
            throw ConfigError(where + key + ": " + e.what());
        } catch (const std::invalid_argument& e) {
            throw ConfigError(where + key + ": " + e.what());
        }
    }
    try {
        b.encoder.validate();
        b.temporal.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("invalid configuration: ") + e.what());
    }
    if (options.jobs == 0) throw ConfigError("jobs must be at least 1");
    if (b.temporal_windows == 0 || b.temporal.bins % b.temporal_windows != 0) {
        throw ConfigError("temporal_windows must divide temporal_bins");
    }
}

// ---------------------------------------------------------------------------
// Suite

std::vector<RunRecord> run_family(protocol::Workbench& bench, Family f) {
    switch (f) {
        case Family::baselines: return bench.run_baselines();
        case Family::ablations: return bench.run_ablation_grid();
        case Family::interaction: return bench.run_interaction_2x2();
        case Family::splits: return bench.run_split_robustness();
        case Family::temporal: return bench.run_temporal_benchmark();
    }
    return {};
}

namespace {

std::string config_digest(const protocol::SuiteOptions& options) { return sha256_hex(options.canonical()); }

}  // namespace

SuiteResult run_and_emit(protocol::Workbench& bench, const fs::path& out_dir, const EmitOptions& options) {
    SuiteResult result;
    const fs::path raw = out_dir / "raw";
    fs::create_directories(raw);

    // One batch so independent runs from different families share the worker pool.
    std::vector<protocol::ExperimentSpec> specs;
    std::vector<std::pair<Family, std::size_t>> spans;
    for (Family f : options.families) {
        std::vector<protocol::ExperimentSpec> fs_;
        switch (f) {
            case Family::baselines: fs_ = bench.baseline_specs(); break;
            case Family::ablations: fs_ = bench.ablation_specs(); break;
            case Family::interaction: fs_ = bench.interaction_specs(); break;
            case Family::splits: fs_ = bench.split_specs(); break;
            case Family::temporal: fs_ = bench.temporal_specs(); break;
        }
        spans.emplace_back(f, fs_.size());
        specs.insert(specs.end(), fs_.begin(), fs_.end());
    }
    if (options.diagnostics && std::find(options.families.begin(), options.families.end(), Family::baselines) ==
                                   options.families.end()) {
        const auto extra = bench.baseline_specs();
        specs.insert(specs.end(), extra.begin(), extra.end());
    }
    const auto all = bench.run_experiments(specs);

    std::size_t spec_i = 0;
    std::size_t rec_i = 0;
    for (const auto& [family, count] : spans) {
        std::vector<RunRecord> recs;
        for (std::size_t s = 0; s < count; ++s, ++spec_i) {
            const std::size_t n = specs[spec_i].split_seeds.size() * specs[spec_i].model_seeds.size();
            recs.insert(recs.end(), all.begin() + static_cast<std::ptrdiff_t>(rec_i),
                        all.begin() + static_cast<std::ptrdiff_t>(rec_i + n));
            rec_i += n;
        }
        write_atomic(raw / (std::string(to_string(family)) + ".csv"), records_csv(recs));
        if (family == Family::ablations) write_atomic(raw / "ablations_trajectories.csv", trajectories_csv(recs));
        result.records.insert(result.records.end(), recs.begin(), recs.end());
    }

    if (options.diagnostics) {
        const auto d = protocol::run_diagnostics(bench.run_baselines());
        write_atomic(raw / "diagnostics.csv", diagnostics_csv(d));
        write_atomic(raw / "confusion.csv", confusion_csv(d.confusion));
        const std::string seed = std::to_string(d.confusion_seed);
        std::ostringstream h;
        learners::save_model(h, *d.hybrid_model);
        write_atomic(out_dir / "models" / ("hybrid_seed" + seed + ".bin"), h.str());
        std::ostringstream p;
        learners::save_model(p, *d.proxy_model);
        write_atomic(out_dir / "models" / ("proxy_seed" + seed + ".bin"), p.str());
        result.diagnostics = d;
    }

    if (options.timing) {
        auto t = protocol::run_timing(bench, options.timing_repeats);
        write_atomic(raw / "timing.csv", timing_csv(t));
        result.timing = std::move(t);
    }

    refresh_derived(out_dir, bench.options());
    return result;
}

void refresh_derived(const fs::path& out_dir, const protocol::SuiteOptions& options) {
    bool any_family = false;
    for (Family f : kFamilies) any_family |= fs::exists(out_dir / "raw" / (std::string(to_string(f)) + ".csv"));
    if (any_family) write_tables(out_dir);
    write_figures(out_dir);
    Manifest m;
    m.config_digest = config_digest(options);
    m.hardware = protocol::hardware_string();
    write_manifest(out_dir, std::move(m));
}

}  // namespace spikebench::report
