#include "tempeval/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace tempeval {

namespace {

std::string normalize_answer(std::string_view raw) {
    std::string s = trim(raw);
    while (!s.empty() && (s.back() == '.' || std::isspace(static_cast<unsigned char>(s.back()))))
        s.pop_back();
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

void require_comparable(const NumericView& a, const NumericView& b) {
    if (!a.comparable_with(b)) throw std::invalid_argument("incomparable measures");
}

// Deterministic, platform-independent PRNG for the bootstrap.
struct SplitMix64 {
    std::uint64_t state;
    explicit SplitMix64(std::uint64_t seed) : state(seed) {}
    std::uint64_t next() {
        state += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
};

double resample_mean(const std::vector<double>& scores, std::uint64_t seed, int resample_index) {
    SplitMix64 rng(seed ^ (0xd1342543de82ef95ull * static_cast<std::uint64_t>(resample_index + 1)));
    const std::size_t n = scores.size();
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += scores[rng.next() % n];
    return sum / static_cast<double>(n);
}

double percentile(const std::vector<double>& sorted, double q) {
    if (sorted.size() == 1) return sorted.front();
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

ConfidenceInterval bootstrap_impl(const std::vector<double>& scores, double level, int resamples,
                                  std::uint64_t seed, bool parallel) {
    if (scores.empty()) throw std::invalid_argument("bootstrap over empty score list");
    if (level <= 0.0 || level >= 1.0) throw std::invalid_argument("level not in (0,1)");
    std::vector<double> means(static_cast<std::size_t>(resamples));
    if (parallel) {
#pragma omp parallel for schedule(static)
        for (int r = 0; r < resamples; ++r)
            means[static_cast<std::size_t>(r)] = resample_mean(scores, seed, r);
    } else {
        for (int r = 0; r < resamples; ++r)
            means[static_cast<std::size_t>(r)] = resample_mean(scores, seed, r);
    }
    std::sort(means.begin(), means.end());
    const double alpha = 1.0 - level;
    return ConfidenceInterval{level, percentile(means, alpha / 2.0),
                              percentile(means, 1.0 - alpha / 2.0)};
}

} // namespace

std::string MetricItem::flags_str() const {
    std::string out;
    auto add = [&](const char* flag) {
        if (!out.empty()) out += '|';
        out += flag;
    };
    if (smape_undefined_date) add("smape-undefined-date");
    if (mase_degenerate) add("mase-denominator-degenerate");
    if (prediction_unparsable) add("prediction-unparsable");
    return out;
}

int exact_match(const ParseOutcome& pred, std::string_view pred_raw, const TemporalValue& gold,
                std::string_view gold_raw) {
    if (pred.parsed()) return *pred.value == gold ? 1 : 0;
    return normalize_answer(pred_raw) == normalize_answer(gold_raw) ? 1 : 0;
}

int exact_match_raw(std::string_view pred_raw, std::string_view gold_raw) {
    return trim(pred_raw) == trim(gold_raw) ? 1 : 0;
}

std::optional<double> smape_item(const NumericView& yhat, const NumericView& y) {
    require_comparable(yhat, y);
    if (y.measure == Measure::DaysSinceEpoch || y.measure == Measure::YearNumber)
        return std::nullopt;
    const double num = std::abs(yhat.magnitude - y.magnitude);
    const double den = std::abs(yhat.magnitude) + std::abs(y.magnitude);
    if (num == 0.0 && den == 0.0) return 0.0;
    // num <= den holds in exact arithmetic; clamp the last-ulp rounding spill
    return std::min(100.0, 100.0 * num / den);
}

std::optional<double> mase_item(const NumericView& yhat, const NumericView& y,
                                double denominator) {
    require_comparable(yhat, y);
    if (denominator < kDegenerateDenominator) return std::nullopt;
    return std::abs(yhat.magnitude - y.magnitude) / denominator;
}

double signed_error(const NumericView& yhat, const NumericView& y) {
    require_comparable(yhat, y);
    return yhat.magnitude - y.magnitude;
}

MetricSummary aggregate(const std::vector<MetricItem>& items) {
    MetricSummary s;
    s.n_total = static_cast<int>(items.size());
    s.n_em_defined = s.n_total;
    if (items.empty()) return s;
    double em_sum = 0.0, em_raw_sum = 0.0, smape_sum = 0.0, mase_sum = 0.0;
    for (const auto& item : items) {
        em_sum += item.em;
        em_raw_sum += item.em_raw;
        if (item.smape) {
            smape_sum += *item.smape;
            ++s.n_smape_defined;
        }
        if (item.mase) {
            mase_sum += *item.mase;
            ++s.n_mase_defined;
        }
    }
    s.em_rate = 100.0 * em_sum / static_cast<double>(s.n_total);
    s.em_rate_raw = 100.0 * em_raw_sum / static_cast<double>(s.n_total);
    if (s.n_smape_defined > 0) s.smape_mean = smape_sum / static_cast<double>(s.n_smape_defined);
    if (s.n_mase_defined > 0) s.mase_mean = mase_sum / static_cast<double>(s.n_mase_defined);
    return s;
}

ConfidenceInterval bootstrap_ci(const std::vector<double>& scores, double level, int resamples,
                                std::uint64_t seed) {
    return bootstrap_impl(scores, level, resamples, seed, true);
}

ConfidenceInterval bootstrap_ci_serial(const std::vector<double>& scores, double level,
                                       int resamples, std::uint64_t seed) {
    return bootstrap_impl(scores, level, resamples, seed, false);
}

} // namespace tempeval
