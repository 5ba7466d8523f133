#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tempeval/corpus.hpp"
#include "tempeval/metrics.hpp"
#include "tempeval/scaling.hpp"

namespace tempeval {

// Absolute-error frequency over items with a defined nonzero error. Integral
// errors bucket at the integer; fractional ones at 6 decimals.
struct ErrorHistogram {
    std::map<double, int> bins;
    std::map<double, double> shares; // percent of all erroneous items
    int n_errors = 0;
};

ErrorHistogram abs_error_histogram(const std::vector<MetricItem>& items);

struct CategoryShareRow {
    std::string category;
    double share_all = 0.0;      // percent of all items
    double share_selected = 0.0; // percent of items matching the predicate
};

struct CategoryShareTable {
    std::vector<CategoryShareRow> rows; // sorted by descending share_all
    int n_all = 0;
    int n_selected = 0;
};

// Off-by-one predicate used throughout the analyses.
bool is_off_by_one(const MetricItem& item);

CategoryShareTable category_share(
    const std::vector<MetricItem>& items,
    const std::function<std::string(const MetricItem&)>& label,
    const std::function<bool(const MetricItem&)>& predicate = is_off_by_one);

struct DirectionalRow {
    int n = 0;
    std::optional<double> smape_mean, smape_std;
    std::optional<double> mase_mean, mase_std;
};

// Metric means and population stds over strictly positive / strictly negative
// signed errors.
struct DirectionalReport {
    DirectionalRow positive;
    DirectionalRow negative;
};

DirectionalReport directional_metrics(const std::vector<MetricItem>& items);

// Spearman's rho with average-rank tie handling. Throws on length mismatch
// or fewer than two points.
double spearman_rho(const std::vector<double>& a, const std::vector<double>& b);

struct RankingComparison {
    std::string metric_a;
    std::string metric_b;
    double rho = 0.0;
    int n = 0;
};

enum class BaselineKind { Mean, Median };
enum class BaselineGrouping { SplitUnit, SplitUnitCluster };

struct BaselinePrediction {
    std::string item_id;
    std::string rendered; // constant group prediction in the item's format
};

// One constant prediction per group applied to all its items. Cluster
// grouping requires a scaling table.
std::vector<BaselinePrediction> baseline_predictions(const Corpus& corpus, BaselineKind kind,
                                                     BaselineGrouping grouping,
                                                     const ScalingTable* scaling = nullptr);

struct Interval {
    double low = 0.0;
    double high = 0.0;
};

// Achievable corpus-level sMAPE range given an EM rate and the minimum
// per-wrong-answer sMAPE m: [(1-em) m, (1-em) 100].
Interval smape_reach(double em, double min_err);

struct AuditedExpression {
    std::string lhs;
    double stated = 0.0;
    double recomputed = 0.0;
    bool correct = false;
};

struct ArithmeticAudit {
    std::vector<AuditedExpression> expressions;
    std::optional<double> correct_fraction;
};

// Finds "a op b [op c ...] = r" chains in a reasoning trace, recomputes the
// left-hand side (left to right, + - * /), and checks the stated result to
// 1e-6 relative tolerance.
ArithmeticAudit audit_cot_arithmetic(std::string_view trace);

} // namespace tempeval
