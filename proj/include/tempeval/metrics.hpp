#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tempeval/temporal.hpp"

namespace tempeval {

// One scored prediction. Metric fields are empty where the metric is not
// defined for the item (see the flags).
struct MetricItem {
    std::string item_id;
    TemporalUnit unit = TemporalUnit::Years;
    std::optional<NumericView> gold_view;
    std::optional<NumericView> pred_view;
    int em = 0;      // canonical-value exact match (headline)
    int em_raw = 0;  // raw-string exact match
    std::optional<double> signed_error; // pred - gold in the shared measure
    std::optional<double> smape;        // [0, 100]
    std::optional<double> mase;         // >= 0
    bool smape_undefined_date = false;
    bool mase_degenerate = false;
    bool prediction_unparsable = false;

    std::string flags_str() const;
};

int exact_match(const ParseOutcome& pred, std::string_view pred_raw, const TemporalValue& gold,
                std::string_view gold_raw);

// Raw-string equality after trimming only.
int exact_match_raw(std::string_view pred_raw, std::string_view gold_raw);

// 100 |y^ - y| / (|y^| + |y|); 0 when both are 0. Empty for date and bare-year
// measures. Throws std::invalid_argument on incomparable measures.
std::optional<double> smape_item(const NumericView& yhat, const NumericView& y);

// sMAPE value assigned to an unparsable prediction on an sMAPE-defined item.
inline constexpr double kSmapeUnparsable = 100.0;

// |y^ - y| / denominator; empty when the denominator is degenerate.
std::optional<double> mase_item(const NumericView& yhat, const NumericView& y,
                                double denominator);

inline constexpr double kDegenerateDenominator = 1e-9;

// y^ - y in the shared measure (days for dates, unit counts otherwise).
double signed_error(const NumericView& yhat, const NumericView& y);

struct ConfidenceInterval {
    double level = 0.95;
    double low = 0.0;
    double high = 0.0;
    // method: percentile bootstrap (the only one implemented)
};

struct MetricSummary {
    int n_total = 0;
    int n_em_defined = 0; // always equals n_total
    int n_smape_defined = 0;
    int n_mase_defined = 0;
    std::optional<double> em_rate;     // percent
    std::optional<double> em_rate_raw; // percent
    std::optional<double> smape_mean;
    std::optional<double> mase_mean;
    std::optional<ConfidenceInterval> em_ci;
    std::optional<ConfidenceInterval> smape_ci;
    std::optional<ConfidenceInterval> mase_ci;
};

// Arithmetic means over defined items; no CIs attached (callers bootstrap
// where they have run- or item-level samples).
MetricSummary aggregate(const std::vector<MetricItem>& items);

// Seeded percentile bootstrap over run-level scores. Each resample draws its
// generator from (seed, resample index), so the parallel and serial paths are
// bit-identical.
ConfidenceInterval bootstrap_ci(const std::vector<double>& scores, double level = 0.95,
                                int resamples = 10000, std::uint64_t seed = 42);

// Serial reference for the OpenMP implementation above; same contract,
// same bits.
ConfidenceInterval bootstrap_ci_serial(const std::vector<double>& scores, double level = 0.95,
                                       int resamples = 10000, std::uint64_t seed = 42);

} // namespace tempeval
