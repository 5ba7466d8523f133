// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Run via ctest or directly; paths resolve against the source tree.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tempeval/analysis.hpp"
#include "tempeval/corpus.hpp"
#include "tempeval/metrics.hpp"
#include "tempeval/prompts.hpp"
#include "tempeval/runner.hpp"
#include "tempeval/scaling.hpp"

#include "fixture_expected.inc"

using namespace tempeval;

namespace {

const std::string kRoot = TEMPEVAL_SOURCE_DIR;
int g_failed = 0;

void report(int number, const std::string& name, bool ok, const std::string& detail = "") {
    std::printf("[%s] criterion %2d: %s%s%s\n", ok ? "PASS" : "FAIL", number, name.c_str(),
                detail.empty() ? "" : " - ", detail.c_str());
    if (!ok) ++g_failed;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

NumericView count_view(double v, TemporalUnit unit = TemporalUnit::Hours) {
    return NumericView{v, Measure::CountOf, unit};
}

// ---- criterion 1 -----------------------------------------------------------

void dataset_audit() {
    const auto start = std::chrono::steady_clock::now();
    Corpus corpus = load_dataset(kRoot + "/data/tempanswerqa.jsonl", /*strict=*/false);
    DatasetStats stats = corpus_stats(corpus);
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - start)
                             .count();

    auto unit_count = [&](Dataset d, TemporalUnit u) {
        int n = 0;
        for (const auto& [key, count] : stats.counts)
            if (key.dataset == d && key.unit == u) n += count;
        return n;
    };
    bool ok = true;
    std::string detail;
    const std::pair<TemporalUnit, int> tot_expected[] = {
        {TemporalUnit::Seconds, 411}, {TemporalUnit::Date, 328}, {TemporalUnit::Years, 229},
        {TemporalUnit::Days, 100},    {TemporalUnit::Months, 50}, {TemporalUnit::Minutes, 38}};
    for (const auto& [unit, expected] : tot_expected) {
        if (unit_count(Dataset::ToT, unit) != expected) {
            ok = false;
            detail = "ToT " + std::string(to_string(unit)) + " = " +
                     std::to_string(unit_count(Dataset::ToT, unit)) + ", want " +
                     std::to_string(expected);
        }
    }
    const std::pair<TemporalUnit, int> ttqa_expected[] = {{TemporalUnit::Years, 1194},
                                                          {TemporalUnit::YearOnly, 305},
                                                          {TemporalUnit::Days, 94},
                                                          {TemporalUnit::Months, 85},
                                                          {TemporalUnit::Date, 59}};
    for (const auto& [unit, expected] : ttqa_expected) {
        if (unit_count(Dataset::TTQA, unit) != expected) {
            ok = false;
            detail = "TTQA " + std::string(to_string(unit)) + " mismatch";
        }
    }
    if (corpus.items.size() != 3434) {
        ok = false;
        detail = "total " + std::to_string(corpus.items.size()) + ", want 3434";
    }
    if (stats.totals[Dataset::ToT] != 1697 || stats.totals[Dataset::TTQA] != 1737) {
        ok = false;
        detail = "per-dataset totals off";
    }
    if (!corpus.rejections.empty()) {
        ok = false;
        detail = "rejection report not empty";
    }
    if (elapsed >= 5000) {
        ok = false;
        detail = "load took " + std::to_string(elapsed) + " ms";
    }
    report(1, "dataset audit reproduces the published unit counts", ok, detail);
}

// ---- criterion 2 -----------------------------------------------------------

void metric_pointwise() {
    bool ok = true;
    std::string detail;
    const double s1 = *smape_item(count_view(5), count_view(3));
    if (std::abs(s1 - 25.000) > 1e-3) {
        ok = false;
        detail = "smape(5,3) = " + format_double(s1);
    }
    const double s2 = *smape_item(count_view(0.057, TemporalUnit::Days),
                                  count_view(418, TemporalUnit::Days));
    if (std::abs(s2 - 99.973) > 1e-3) {
        ok = false;
        detail = "smape(0.057,418) = " + format_double(s2);
    }
    if (*smape_item(count_view(0), count_view(0)) != 0.0) {
        ok = false;
        detail = "smape(0,0) != 0";
    }
    if (kSmapeUnparsable != 100.0) {
        ok = false;
        detail = "unparsable smape != 100";
    }
    const double button = *mase_item(count_view(2018, TemporalUnit::Years),
                                     count_view(2009, TemporalUnit::Years), 1.758);
    if (std::abs(button - 5.12) > 0.01) {
        ok = false;
        detail = "button mase = " + format_double(button);
    }
    report(2, "pointwise sMAPE/MASE values", ok, detail);
}

// ---- criterion 3 -----------------------------------------------------------

void mean_baseline_identity() {
    std::mt19937_64 rng(0xacce1);
    bool ok = true;
    int checked = 0;
    for (int group = 0; group < 100 && ok; ++group) {
        const int n = 2 + int(rng() % 64);
        std::vector<double> values;
        for (int i = 0; i < n; ++i)
            values.push_back(double(rng() % 2000000) / 41.0 - 20000.0);
        double sum = 0.0;
        for (double v : values) sum += v;
        const double mean = sum / n;
        for (double v : values) {
            const double denominator = std::abs(v - mean);
            if (denominator < kDegenerateDenominator) continue;
            ++checked;
            if (*mase_item(count_view(mean), count_view(v), denominator) != 1.0) {
                ok = false;
                break;
            }
        }
    }
    report(3, "mean predictor scores MASE exactly 1", ok && checked > 1000,
           "checked " + std::to_string(checked) + " items");
}

// ---- criterion 4 -----------------------------------------------------------

void smape_properties() {
    std::mt19937_64 rng(0xacce2);
    bool ok = true;
    std::string detail;
    for (int i = 0; i < 1000 && ok; ++i) {
        const double a = double(rng() % 4000000) / 173.0 - 10000.0;
        const double b = double(rng() % 4000000) / 173.0 - 10000.0;
        const double k = 0.25 + double(rng() % 4000) / 250.0;
        const double ab = *smape_item(count_view(a), count_view(b));
        const double ba = *smape_item(count_view(b), count_view(a));
        const double kk = *smape_item(count_view(k * a), count_view(k * b));
        if (ab < 0.0 || ab > 100.0) {
            ok = false;
            detail = "bound violated";
        }
        if (std::abs(ab - ba) > 1e-12) {
            ok = false;
            detail = "asymmetry";
        }
        if (std::abs(kk - ab) > 1e-12 * std::max(1.0, ab)) {
            ok = false;
            detail = "scale variance " + format_double(std::abs(kk - ab));
        }
    }
    report(4, "sMAPE bounded, symmetric, scale-invariant over 1000 pairs", ok, detail);
}

// ---- criterion 5 -----------------------------------------------------------

std::map<double, int> oracle_bins(const std::vector<MetricItem>& items) {
    std::map<double, int> bins;
    for (const auto& item : items) {
        if (!item.signed_error || *item.signed_error == 0.0) continue;
        const double e = std::abs(*item.signed_error);
        const double key =
            std::abs(e - std::round(e)) < 1e-9 ? std::round(e) : std::round(e * 1e6) / 1e6;
        ++bins[key];
    }
    return bins;
}

double oracle_rho(const std::vector<double>& a, const std::vector<double>& b) {
    const size_t n = a.size();
    auto rank = [&](const std::vector<double>& xs, size_t i) {
        int smaller = 0;
        for (size_t j = 0; j < n; ++j)
            if (xs[j] < xs[i]) ++smaller;
        return double(smaller + 1);
    };
    double d2 = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double d = rank(a, i) - rank(b, i);
        d2 += d * d;
    }
    return 1.0 - 6.0 * d2 / (double(n) * (double(n) * double(n) - 1.0));
}

void oracle_equivalence() {
    std::mt19937_64 rng(0xacce3);
    bool ok = true;
    std::string detail;
    const char* cats[] = {"w", "x", "y", "z"};
    for (int run = 0; run < 50 && ok; ++run) {
        std::vector<MetricItem> items;
        std::map<std::string, std::string> labels;
        const int n = 1 + int(rng() % 200);
        int selected = 0;
        for (int i = 0; i < n; ++i) {
            MetricItem m;
            m.item_id = "r" + std::to_string(run) + "-" + std::to_string(i);
            if (rng() % 8 != 0) {
                double e = double(int(rng() % 13) - 6);
                if (rng() % 5 == 0) e += 0.5;
                m.signed_error = e;
            }
            if (is_off_by_one(m)) ++selected;
            labels[m.item_id] = cats[rng() % 4];
            items.push_back(std::move(m));
        }
        if (abs_error_histogram(items).bins != oracle_bins(items)) {
            ok = false;
            detail = "histogram mismatch on run " + std::to_string(run);
            break;
        }
        if (selected == 0) continue;
        auto table =
            category_share(items, [&](const MetricItem& m) { return labels.at(m.item_id); });
        for (const auto& row : table.rows) {
            int all = 0, sel = 0;
            for (const auto& m : items) {
                if (labels.at(m.item_id) != row.category) continue;
                ++all;
                if (is_off_by_one(m)) ++sel;
            }
            if (row.share_all != 100.0 * all / double(n) ||
                row.share_selected != 100.0 * sel / double(selected)) {
                ok = false;
                detail = "share mismatch";
            }
        }
    }
    // every permutation up to length 6, against the brute-force rank oracle
    for (int n = 2; n <= 6 && ok; ++n) {
        std::vector<double> perm(static_cast<size_t>(n));
        std::iota(perm.begin(), perm.end(), 1.0);
        std::vector<double> identity = perm;
        std::vector<double> reversed(perm.rbegin(), perm.rend());
        do {
            if (spearman_rho(perm, identity) != oracle_rho(perm, identity) ||
                spearman_rho(perm, reversed) != oracle_rho(perm, reversed)) {
                ok = false;
                detail = "spearman mismatch at n=" + std::to_string(n);
                break;
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
    }
    report(5, "histogram/share/spearman match brute-force oracles exactly", ok, detail);
}

// ---- criterion 6 -----------------------------------------------------------

void clustering_behavior() {
    const auto start = std::chrono::steady_clock::now();
    bool ok = true;
    std::string detail;

    const std::vector<double> bimodal{25, 28, 30, 1998, 2001, 2003};
    const auto labels = cluster_answers(bimodal, 0.3);
    if (labels != std::vector<int>{0, 0, 0, 1, 1, 1}) {
        ok = false;
        detail = "bimodal fixture did not split into two clusters";
    } else {
        const double lo = (25.0 + 28.0 + 30.0) / 3.0;
        const double hi = (1998.0 + 2001.0 + 2003.0) / 3.0;
        double sum0 = 0, sum1 = 0;
        for (size_t i = 0; i < bimodal.size(); ++i)
            (labels[i] == 0 ? sum0 : sum1) += bimodal[i];
        if (std::abs(sum0 / 3.0 - lo) > 1e-9 || std::abs(sum1 / 3.0 - hi) > 1e-9) {
            ok = false;
            detail = "cluster means off";
        }
    }
    const auto unimodal = cluster_answers({10, 11, 12, 13}, 0.3);
    if (unimodal != std::vector<int>{0, 0, 0, 0}) {
        ok = false;
        detail = "unimodal fixture split";
    }
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - start)
                             .count();
    if (elapsed >= 1000) {
        ok = false;
        detail = "took " + std::to_string(elapsed) + " ms";
    }
    report(6, "density clustering fixtures", ok, detail);
}

// ---- criterion 7 -----------------------------------------------------------

void reachability_bound() {
    bool ok = true;
    for (double em : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        for (double m : {1.0, 25.0, 50.0}) {
            const auto interval = smape_reach(em, m);
            if (interval.low != (1.0 - em) * m || interval.high != (1.0 - em) * 100.0)
                ok = false;
        }
    }
    report(7, "sMAPE reachability envelope exact on the grid", ok);
}

// ---- criterion 8 -----------------------------------------------------------

void prompt_goldens() {
    Corpus corpus = load_dataset(kRoot + "/data/tempanswerqa.jsonl");
    const QAItem* ttqa_fixture = nullptr;
    const QAItem* tot_fixture = nullptr;
    for (const auto& item : corpus.items) {
        if (item.id == "ttqa-head-000002") ttqa_fixture = &item;
        if (item.id == "tot-arithmetic-000831") tot_fixture = &item;
    }
    bool ok = ttqa_fixture != nullptr && tot_fixture != nullptr;
    std::string detail;
    if (ok) {
        const std::string ttqa = prompt_to_json(build_prompt(
            *ttqa_fixture, PromptTemplate::defaults(Dataset::TTQA, Prompting::ZeroShot)));
        const std::string tot = prompt_to_json(build_prompt(
            *tot_fixture, PromptTemplate::defaults(Dataset::ToT, Prompting::ZeroShot)));
        if (ttqa != read_file(kRoot + "/data/fixtures/golden_prompt_ttqa_zero_shot.json")) {
            ok = false;
            detail = "TTQA golden drifted";
        }
        if (tot != read_file(kRoot + "/data/fixtures/golden_prompt_tot_zero_shot.json")) {
            ok = false;
            detail = "ToT golden drifted";
        }
    }
    report(8, "prompt builds match the stored goldens byte-for-byte", ok, detail);
}

// ---- criterion 9 -----------------------------------------------------------

void frozen_fixture() {
    setenv("SOURCE_DATE_EPOCH", "0", 1);
    Corpus corpus = load_dataset(kRoot + "/data/tempanswerqa.jsonl");
    auto scaling = build_scaling_table(corpus, assign_clusters(corpus));
    auto predictions = load_predictions(kRoot + "/data/fixtures/predictions.jsonl");

    auto reports = evaluate_run(corpus, predictions, scaling, {});
    bool ok = reports.size() == 4;
    std::string detail = ok ? "" : "expected 4 runs";

    std::map<std::string, const MetricItem*> scored;
    for (const auto& run : reports)
        for (const auto& item : run.per_item) scored[item.item_id] = &item;

    int pinned = 0;
    for (const auto& expected : kExpectedItems) {
        auto it = scored.find(expected.id);
        if (it == scored.end()) {
            ok = false;
            detail = std::string("missing item ") + expected.id;
            break;
        }
        const MetricItem& m = *it->second;
        const bool row_ok =
            m.em == expected.em && m.signed_error.has_value() == expected.has_signed &&
            (!expected.has_signed || *m.signed_error == expected.signed_error) &&
            m.smape.has_value() == expected.has_smape &&
            (!expected.has_smape || *m.smape == expected.smape) &&
            m.mase.has_value() == expected.has_mase &&
            (!expected.has_mase || *m.mase == expected.mase) &&
            m.flags_str() == expected.flags;
        if (!row_ok) {
            ok = false;
            detail = std::string("pinned scores drifted for ") + expected.id;
            break;
        }
        ++pinned;
    }

    for (const auto& expected : kExpectedRuns) {
        const RunReport* found = nullptr;
        for (const auto& run : reports) {
            if (to_string(run.manifest.dataset) == expected.dataset &&
                to_string(run.manifest.split) == expected.split)
                found = &run;
        }
        if (found == nullptr) {
            ok = false;
            detail = std::string("missing run ") + expected.dataset + "/" + expected.split;
            break;
        }
        const auto& s = found->summary;
        if (s.n_total != expected.n_total || s.n_smape_defined != expected.n_smape_defined ||
            s.n_mase_defined != expected.n_mase_defined || *s.em_rate != expected.em_rate ||
            *s.smape_mean != expected.smape_mean || *s.mase_mean != expected.mase_mean) {
            ok = false;
            detail = std::string("aggregates drifted for ") + expected.dataset + "/" +
                     expected.split;
            break;
        }
    }

    // bit-stability across repeat evaluation, pinned via content hash
    const std::string serialized = report_to_json(reports);
    const std::string again = report_to_json(evaluate_run(corpus, predictions, scaling, {}));
    if (serialized != again) {
        ok = false;
        detail = "repeat evaluation produced different bytes";
    }
    const std::string hash = fnv1a_hex(serialized);
    const std::string pinned_hash = trim(read_file(kRoot + "/data/fixtures/report_hash.txt"));
    if (hash != pinned_hash) {
        ok = false;
        detail = "report hash " + hash + " != pinned " + pinned_hash;
    }
    unsetenv("SOURCE_DATE_EPOCH");
    report(9, "frozen fixture scores and bit-identical reports", ok,
           ok ? std::to_string(pinned) + " pinned items verified" : detail);
}

// ---- criterion 10 ----------------------------------------------------------

void declared_non_reproducible() {
    // Model-dependent headline numbers need six LLMs on GPUs and are out of
    // desk scope; what must hold here is that the pipeline emits the tables
    // in the documented layout when given any full prediction dump.
    setenv("SOURCE_DATE_EPOCH", "0", 1);
    Corpus corpus = load_dataset(kRoot + "/data/tempanswerqa.jsonl");
    auto scaling = build_scaling_table(corpus, assign_clusters(corpus));
    auto predictions = load_predictions(kRoot + "/data/fixtures/predictions.jsonl");
    auto reports = evaluate_run(corpus, predictions, scaling, {});
    const auto out_dir = std::filesystem::temp_directory_path() / "tempeval_acceptance_out";
    std::filesystem::remove_all(out_dir);
    render_report(reports, ReportFormat::Markdown, out_dir);
    const std::string md = read_file((out_dir / "summary.md").string());
    bool ok = md.find("| Model | Prompting | EM (%, up) | sMAPE (down) | MASE (down) |") !=
                  std::string::npos &&
              md.find("Most frequent absolute errors") != std::string::npos &&
              md.find("Directional errors") != std::string::npos &&
              md.find("Share by answer format") != std::string::npos &&
              std::filesystem::exists(out_dir / "scatter.csv") &&
              std::filesystem::exists(out_dir / "per_item.csv");
    std::filesystem::remove_all(out_dir);
    unsetenv("SOURCE_DATE_EPOCH");
    report(10,
           "model-run headline numbers (rank correlations, off-by-one shares, leaderboard "
           "EM/sMAPE/MASE) are declared GPU-dependent; table layouts verified on the fixture",
           ok);
}

} // namespace

int main() {
    dataset_audit();
    metric_pointwise();
    mean_baseline_identity();
    smape_properties();
    oracle_equivalence();
    clustering_behavior();
    reachability_bound();
    prompt_goldens();
    frozen_fixture();
    declared_non_reproducible();
    if (g_failed > 0) {
        std::printf("%d criterion(s) failed\n", g_failed);
        return 1;
    }
    std::printf("all acceptance criteria passed\n");
    return 0;
}
