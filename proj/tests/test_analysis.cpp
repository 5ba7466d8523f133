#include <doctest.h>

#include <stdexcept>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include "tempeval/analysis.hpp"

using namespace tempeval;

namespace {

MetricItem item_with_error(std::optional<double> err, std::optional<double> smape = {},
                           std::optional<double> mase = {}) {
    MetricItem m;
    static int counter = 0;
    m.item_id = "i" + std::to_string(counter++);
    m.signed_error = err;
    m.smape = smape;
    m.mase = mase;
    return m;
}

// Brute-force recount, kept deliberately dumb: one pass per distinct bucket.
std::map<double, int> oracle_histogram(const std::vector<MetricItem>& items) {
    std::map<double, int> bins;
    for (const auto& a : items) {
        if (!a.signed_error || *a.signed_error == 0.0) continue;
        double e = std::abs(*a.signed_error);
        double key = std::abs(e - std::round(e)) < 1e-9 ? std::round(e)
                                                        : std::round(e * 1e6) / 1e6;
        int count = 0;
        for (const auto& b : items) {
            if (!b.signed_error || *b.signed_error == 0.0) continue;
            double eb = std::abs(*b.signed_error);
            double kb = std::abs(eb - std::round(eb)) < 1e-9 ? std::round(eb)
                                                             : std::round(eb * 1e6) / 1e6;
            if (kb == key) ++count;
        }
        bins[key] = count;
    }
    return bins;
}

// Brute-force rank: 1 + number of strictly smaller values, averaged over ties.
std::vector<double> oracle_ranks(const std::vector<double>& xs) {
    std::vector<double> ranks(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) {
        int smaller = 0, equal = 0;
        for (size_t j = 0; j < xs.size(); ++j) {
            if (xs[j] < xs[i]) ++smaller;
            if (xs[j] == xs[i]) ++equal;
        }
        ranks[i] = smaller + (equal + 1) / 2.0;
    }
    return ranks;
}

double oracle_spearman(const std::vector<double>& a, const std::vector<double>& b) {
    const auto ra = oracle_ranks(a);
    const auto rb = oracle_ranks(b);
    double d2 = 0.0;
    for (size_t i = 0; i < a.size(); ++i) d2 += (ra[i] - rb[i]) * (ra[i] - rb[i]);
    const double n = double(a.size());
    return 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
}

} // namespace

TEST_CASE("histogram counts and shares") {
    std::vector<MetricItem> items{item_with_error(1), item_with_error(-1), item_with_error(2),
                                  item_with_error(1)};
    auto hist = abs_error_histogram(items);
    CHECK(hist.n_errors == 4);
    CHECK(hist.bins[1.0] == 3);
    CHECK(hist.bins[2.0] == 1);
    CHECK(hist.shares[1.0] == 75.0);
    CHECK(hist.shares[2.0] == 25.0);
}

TEST_CASE("histogram ignores zero and undefined errors") {
    std::vector<MetricItem> items{item_with_error(0), item_with_error({})};
    auto hist = abs_error_histogram(items);
    CHECK(hist.n_errors == 0);
    CHECK(hist.bins.empty());
}

TEST_CASE("fractional errors bucket at six decimals") {
    std::vector<MetricItem> items{item_with_error(417.943), item_with_error(-417.943)};
    auto hist = abs_error_histogram(items);
    CHECK(hist.bins[417.943] == 2);
}

TEST_CASE("histogram matches the counting oracle on random runs") {
    std::mt19937 rng(73);
    for (int run = 0; run < 50; ++run) {
        std::vector<MetricItem> items;
        const int n = 1 + int(rng() % 200);
        for (int i = 0; i < n; ++i) {
            if (rng() % 10 == 0) {
                items.push_back(item_with_error({}));
            } else {
                double e = double(int(rng() % 21) - 10);
                if (rng() % 4 == 0) e += 0.25;
                items.push_back(item_with_error(e));
            }
        }
        auto hist = abs_error_histogram(items);
        auto expected = oracle_histogram(items);
        CHECK(hist.bins == expected);
        // permutation invariance
        std::vector<MetricItem> shuffled = items;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        CHECK(abs_error_histogram(shuffled).bins == expected);
        int total = 0;
        double share_sum = 0.0;
        for (const auto& [key, count] : hist.bins) {
            total += count;
            share_sum += hist.shares.at(key);
        }
        CHECK(total == hist.n_errors);
        if (hist.n_errors > 0) CHECK(share_sum == doctest::Approx(100.0).epsilon(1e-9));
    }
}

TEST_CASE("category share example") {
    std::vector<MetricItem> items;
    std::map<std::string, std::string> labels;
    auto add = [&](const std::string& cat, double err) {
        auto m = item_with_error(err);
        labels[m.item_id] = cat;
        items.push_back(m);
    };
    add("A", 1);
    add("A", 5);
    add("A", 0);
    add("B", -1);
    auto table = category_share(items, [&](const MetricItem& m) { return labels.at(m.item_id); });
    REQUIRE(table.rows.size() == 2);
    CHECK(table.rows[0].category == "A");
    CHECK(table.rows[0].share_all == 75.0);
    CHECK(table.rows[0].share_selected == 50.0);
    CHECK(table.rows[1].share_all == 25.0);
    CHECK(table.rows[1].share_selected == 50.0);
}

TEST_CASE("single category takes both full shares") {
    std::vector<MetricItem> items{item_with_error(1), item_with_error(3)};
    auto table = category_share(items, [](const MetricItem&) { return "only"; });
    REQUIRE(table.rows.size() == 1);
    CHECK(table.rows[0].share_all == 100.0);
    CHECK(table.rows[0].share_selected == 100.0);
}

TEST_CASE("unlabelled items fault") {
    std::vector<MetricItem> items{item_with_error(1)};
    CHECK_THROWS_AS(category_share(items, [](const MetricItem&) { return ""; }),
                    std::invalid_argument);
}

TEST_CASE("category share columns sum to 100 against a counting oracle") {
    std::mt19937 rng(79);
    const char* cats[] = {"alpha", "beta", "gamma", "delta"};
    for (int run = 0; run < 50; ++run) {
        std::vector<MetricItem> items;
        std::map<std::string, std::string> labels;
        const int n = 2 + int(rng() % 200);
        int off_by_one = 0;
        for (int i = 0; i < n; ++i) {
            double e = double(int(rng() % 5) - 2);
            auto m = item_with_error(e);
            if (std::abs(e) == 1.0) ++off_by_one;
            labels[m.item_id] = cats[rng() % 4];
            items.push_back(m);
        }
        if (off_by_one == 0) continue;
        auto table =
            category_share(items, [&](const MetricItem& m) { return labels.at(m.item_id); });
        double sum_all = 0.0, sum_sel = 0.0;
        for (const auto& row : table.rows) {
            sum_all += row.share_all;
            sum_sel += row.share_selected;
            // recount this category directly
            int all = 0, sel = 0;
            for (const auto& m : items) {
                if (labels.at(m.item_id) != row.category) continue;
                ++all;
                if (is_off_by_one(m)) ++sel;
            }
            CHECK(row.share_all == 100.0 * all / double(n));
            CHECK(row.share_selected == 100.0 * sel / double(off_by_one));
        }
        CHECK(sum_all == doctest::Approx(100.0).epsilon(1e-9));
        CHECK(sum_sel == doctest::Approx(100.0).epsilon(1e-9));
    }
}

TEST_CASE("directional metrics") {
    std::vector<MetricItem> items{
        item_with_error(2, 10, 2), item_with_error(4, 30, 4), // positive
        item_with_error(-1, 50, 0.5),                          // negative
        item_with_error(0, 0, 0),                              // excluded
    };
    auto report = directional_metrics(items);
    CHECK(report.positive.n == 2);
    CHECK(*report.positive.mase_mean == 3.0);
    CHECK(*report.positive.mase_std == 1.0); // population std
    CHECK(*report.positive.smape_mean == 20.0);
    CHECK(report.negative.n == 1);
    CHECK(*report.negative.mase_mean == 0.5);
    CHECK(*report.negative.mase_std == 0.0);
}

TEST_CASE("directional partition is exhaustive and exclusive") {
    std::mt19937 rng(83);
    std::vector<MetricItem> items;
    int nonzero = 0;
    for (int i = 0; i < 300; ++i) {
        double e = double(int(rng() % 11) - 5);
        if (e != 0.0) ++nonzero;
        items.push_back(item_with_error(e, 10, 1));
    }
    auto report = directional_metrics(items);
    CHECK(report.positive.n + report.negative.n == nonzero);
}

TEST_CASE("missing direction rows are flagged by n == 0") {
    auto report = directional_metrics({item_with_error(3, 10, 1)});
    CHECK(report.negative.n == 0);
    CHECK_FALSE(report.negative.smape_mean.has_value());
}

TEST_CASE("spearman basics") {
    CHECK(spearman_rho({1, 2, 3}, {10, 20, 30}) == 1.0);
    CHECK(spearman_rho({1, 2, 3}, {30, 20, 10}) == -1.0);
    CHECK(spearman_rho({1, 2, 3}, {1, 3, 2}) == 0.5);
    CHECK_THROWS_AS(spearman_rho({1, 2}, {1, 2, 3}), std::invalid_argument);
    CHECK_THROWS_AS(spearman_rho({1}, {1}), std::invalid_argument);
}

TEST_CASE("spearman handles ties with average ranks") {
    // ranks a = (1.5, 1.5, 3), b = (1, 2, 3); Pearson on those ranks:
    // cov = 1.5, var_a = 1.5, var_b = 2 -> rho = 1.5 / sqrt(3)
    CHECK(spearman_rho({5, 5, 9}, {1, 2, 3}) ==
          doctest::Approx(1.5 / std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("spearman equals the brute-force oracle on every permutation up to n = 6") {
    for (int n = 2; n <= 6; ++n) {
        std::vector<double> perm(static_cast<size_t>(n));
        std::iota(perm.begin(), perm.end(), 1.0);
        std::vector<double> identity = perm;
        std::vector<double> reversed(perm.rbegin(), perm.rend());
        do {
            CHECK(spearman_rho(perm, identity) == oracle_spearman(perm, identity));
            CHECK(spearman_rho(perm, reversed) == oracle_spearman(perm, reversed));
            CHECK(spearman_rho(identity, perm) == oracle_spearman(identity, perm));
        } while (std::next_permutation(perm.begin(), perm.end()));
    }
}

TEST_CASE("smape_reach") {
    auto at = [](double em, double m) { return smape_reach(em, m); };
    CHECK(at(1.0, 50).low == 0.0);
    CHECK(at(1.0, 50).high == 0.0);
    CHECK(at(0.5, 50).low == 25.0);
    CHECK(at(0.5, 50).high == 50.0);
    CHECK(at(0.0, 1).low == 1.0);
    CHECK(at(0.0, 1).high == 100.0);
    for (double em : {0.0, 0.1, 0.33, 0.9}) {
        for (double m : {1.0, 25.0, 50.0, 100.0}) {
            auto r = at(em, m);
            CHECK(r.low >= 0.0);
            CHECK(r.high <= 100.0);
            CHECK(r.low <= r.high);
            CHECK(r.low == (1.0 - em) * m);
        }
    }
}

TEST_CASE("arithmetic audit") {
    SUBCASE("correct and incorrect expressions") {
        auto audit = audit_cot_arithmetic("First 8 + 4 = 12, then 16 * 15 = 250.");
        REQUIRE(audit.expressions.size() == 2);
        CHECK(audit.expressions[0].correct);
        CHECK_FALSE(audit.expressions[1].correct);
        CHECK(audit.expressions[1].recomputed == 240.0);
        CHECK(*audit.correct_fraction == 0.5);
    }
    SUBCASE("no expressions") {
        auto audit = audit_cot_arithmetic("pure prose without any equations");
        CHECK(audit.expressions.empty());
        CHECK_FALSE(audit.correct_fraction.has_value());
    }
    SUBCASE("left-to-right chains") {
        auto audit = audit_cot_arithmetic("2 + 3 * 4 = 20");
        REQUIRE(audit.expressions.size() == 1);
        CHECK(audit.expressions[0].correct);
    }
    SUBCASE("division and unicode operators") {
        auto audit = audit_cot_arithmetic("we get 240 / 2 = 120 and 16 × 15 = 240");
        REQUIRE(audit.expressions.size() == 2);
        CHECK(audit.expressions[0].correct);
        CHECK(audit.expressions[1].correct);
    }
    SUBCASE("parentheses are transparent") {
        auto audit = audit_cot_arithmetic("(16 * 15) = 240");
        REQUIRE(audit.expressions.size() == 1);
        CHECK(audit.expressions[0].correct);
    }
    SUBCASE("division by zero is never correct") {
        auto audit = audit_cot_arithmetic("5 / 0 = 1");
        REQUIRE(audit.expressions.size() == 1);
        CHECK_FALSE(audit.expressions[0].correct);
    }
    SUBCASE("decimals and negative results") {
        auto audit = audit_cot_arithmetic("16.766 * 7.5 = 125.745 and 3 - 5 = -2");
        REQUIRE(audit.expressions.size() == 2);
        CHECK(audit.expressions[0].correct);
        CHECK(audit.expressions[1].correct);
    }
    SUBCASE("whitespace and thousands separators do not change correctness") {
        auto a = audit_cot_arithmetic("1200 + 100 = 1300");
        auto b = audit_cot_arithmetic("1,200+100   =   1,300");
        REQUIRE(a.expressions.size() == 1);
        REQUIRE(b.expressions.size() == 1);
        CHECK(a.expressions[0].correct == b.expressions[0].correct);
        CHECK(a.expressions[0].recomputed == b.expressions[0].recomputed);
    }
}

TEST_CASE("baseline predictions") {
    Corpus corpus;
    corpus.content_hash = "test";
    auto add = [&](const std::string& id, double v) {
        QAItem item;
        item.id = id;
        item.dataset = Dataset::TTQA;
        item.split = Split::Head;
        item.question = "q";
        item.expected_raw = format_double(v);
        item.unit = TemporalUnit::Years;
        item.format = AnswerFormat{FormatKind::Count, TemporalUnit::Years, {}};
        corpus.items.push_back(std::move(item));
    };
    add("a", 2);
    add("b", 4);
    add("c", 6);
    SUBCASE("mean") {
        auto preds = baseline_predictions(corpus, BaselineKind::Mean, BaselineGrouping::SplitUnit);
        REQUIRE(preds.size() == 3);
        for (const auto& p : preds) CHECK(p.rendered == "4");
    }
    SUBCASE("median of skewed values") {
        corpus.items.clear();
        add("a", 1);
        add("b", 2);
        add("c", 100);
        auto preds =
            baseline_predictions(corpus, BaselineKind::Median, BaselineGrouping::SplitUnit);
        for (const auto& p : preds) CHECK(p.rendered == "2");
    }
    SUBCASE("cluster grouping requires the table") {
        CHECK_THROWS_AS(
            baseline_predictions(corpus, BaselineKind::Mean, BaselineGrouping::SplitUnitCluster),
            std::invalid_argument);
        auto table = build_scaling_table(corpus, assign_clusters(corpus));
        auto preds = baseline_predictions(corpus, BaselineKind::Mean,
                                          BaselineGrouping::SplitUnitCluster, &table);
        for (const auto& p : preds) CHECK(p.rendered == "4");
    }
}

TEST_CASE("audit correctness is stable under spacing and separator noise") {
    std::mt19937 rng(89);
    for (int round = 0; round < 50; ++round) {
        const long a = 100 + long(rng() % 5000);
        const long b = 1 + long(rng() % 900);
        const long stated = (rng() % 2 == 0) ? a + b : a + b + 1 + long(rng() % 5);
        auto with_sep = [](long v) {
            std::string s = std::to_string(v);
            if (s.size() > 3) s.insert(s.size() - 3, ",");
            return s;
        };
        const std::string spaces(rng() % 4, ' ');
        const std::string noisy = with_sep(a) + spaces + "+" + spaces + with_sep(b) + spaces +
                                  "=" + spaces + with_sep(stated);
        const std::string plain = std::to_string(a) + " + " + std::to_string(b) + " = " +
                                  std::to_string(stated);
        auto audit_noisy = audit_cot_arithmetic(noisy);
        auto audit_plain = audit_cot_arithmetic(plain);
        REQUIRE(audit_noisy.expressions.size() == 1);
        REQUIRE(audit_plain.expressions.size() == 1);
        CHECK(audit_noisy.expressions[0].correct == audit_plain.expressions[0].correct);
        CHECK(audit_noisy.expressions[0].recomputed == audit_plain.expressions[0].recomputed);
    }
}
