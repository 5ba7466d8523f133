#include "tempeval/analysis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace tempeval {

namespace {

constexpr double kIntegralEps = 1e-9;

double bucket_error(double abs_err) {
    const double rounded = std::round(abs_err);
    if (std::abs(abs_err - rounded) < kIntegralEps) return rounded;
    return std::round(abs_err * 1e6) / 1e6;
}

std::optional<double> mean_of(const std::vector<double>& xs) {
    if (xs.empty()) return std::nullopt;
    double sum = 0.0;
    for (double x : xs) sum += x;
    return sum / static_cast<double>(xs.size());
}

std::optional<double> population_std(const std::vector<double>& xs) {
    auto m = mean_of(xs);
    if (!m) return std::nullopt;
    double acc = 0.0;
    for (double x : xs) acc += (x - *m) * (x - *m);
    return std::sqrt(acc / static_cast<double>(xs.size()));
}

DirectionalRow directional_row(const std::vector<const MetricItem*>& items) {
    DirectionalRow row;
    row.n = static_cast<int>(items.size());
    std::vector<double> smapes, mases;
    for (const auto* item : items) {
        if (item->smape) smapes.push_back(*item->smape);
        if (item->mase) mases.push_back(*item->mase);
    }
    row.smape_mean = mean_of(smapes);
    row.smape_std = population_std(smapes);
    row.mase_mean = mean_of(mases);
    row.mase_std = population_std(mases);
    return row;
}

// Average ranks, 1-based; ties share the mean of their rank positions.
std::vector<double> average_ranks(const std::vector<double>& xs) {
    const std::size_t n = xs.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (xs[a] != xs[b]) return xs[a] < xs[b];
        return a < b;
    });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && xs[order[j + 1]] == xs[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

bool integral_ranks(const std::vector<double>& ranks) {
    for (double r : ranks)
        if (r != std::floor(r)) return false;
    return true;
}

// --- arithmetic-audit scanner ---------------------------------------------

struct Scanner {
    std::string_view s;
    std::size_t pos = 0;

    void skip_space() {
        while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
    }
    void skip_space_parens() {
        while (pos < s.size() &&
               (s[pos] == ' ' || s[pos] == '\t' || s[pos] == '(' || s[pos] == ')'))
            ++pos;
    }

    // Unsigned decimal with optional thousands grouping; nullopt if the text
    // at pos is not a well-formed number.
    std::optional<std::pair<double, std::size_t>> peek_number(bool allow_sign) {
        std::size_t p = pos;
        if (allow_sign && p < s.size() && s[p] == '-') ++p;
        std::size_t start = p;
        if (p >= s.size() || !std::isdigit(static_cast<unsigned char>(s[p]))) return std::nullopt;
        while (p < s.size() && (std::isdigit(static_cast<unsigned char>(s[p])) || s[p] == ',' ||
                                s[p] == '.'))
            ++p;
        // trailing '.'/',' belong to prose, not the number
        while (p > start && (s[p - 1] == '.' || s[p - 1] == ','))
            --p;
        std::string text(s.substr(pos, p - pos));
        std::string plain;
        plain.reserve(text.size());
        bool seen_dot = false;
        for (std::size_t i = 0; i < text.size(); ++i) {
            char c = text[i];
            if (c == ',') {
                // validate 3-digit grouping
                if (i + 3 >= text.size()) return std::nullopt;
                for (std::size_t g = 1; g <= 3; ++g)
                    if (!std::isdigit(static_cast<unsigned char>(text[i + g])))
                        return std::nullopt;
                continue;
            }
            if (c == '.') {
                if (seen_dot) return std::nullopt;
                seen_dot = true;
            }
            plain.push_back(c);
        }
        try {
            return std::make_pair(std::stod(plain), p);
        } catch (const std::exception&) {
            return std::nullopt;
        }
    }

    // One of + - * x / (and the UTF-8 forms of multiply/divide signs).
    std::optional<std::pair<char, std::size_t>> peek_op() {
        if (pos >= s.size()) return std::nullopt;
        char c = s[pos];
        if (c == '+' || c == '-' || c == '*' || c == '/')
            return std::make_pair(c, pos + 1);
        if (c == 'x' || c == 'X') {
            // lone x between spaces reads as multiplication
            bool before_ok = pos == 0 || s[pos - 1] == ' ';
            bool after_ok = pos + 1 < s.size() && s[pos + 1] == ' ';
            if (before_ok && after_ok) return std::make_pair('*', pos + 1);
            return std::nullopt;
        }
        if (pos + 1 < s.size() && static_cast<unsigned char>(c) == 0xC3) {
            unsigned char next = static_cast<unsigned char>(s[pos + 1]);
            if (next == 0x97) return std::make_pair('*', pos + 2); // multiplication sign
            if (next == 0xB7) return std::make_pair('/', pos + 2); // division sign
        }
        return std::nullopt;
    }
};

} // namespace

bool is_off_by_one(const MetricItem& item) {
    return item.signed_error.has_value() &&
           std::abs(std::abs(*item.signed_error) - 1.0) < kIntegralEps;
}

ErrorHistogram abs_error_histogram(const std::vector<MetricItem>& items) {
    ErrorHistogram hist;
    for (const auto& item : items) {
        if (!item.signed_error || *item.signed_error == 0.0) continue;
        ++hist.bins[bucket_error(std::abs(*item.signed_error))];
        ++hist.n_errors;
    }
    for (const auto& [err, count] : hist.bins)
        hist.shares[err] = 100.0 * static_cast<double>(count) / static_cast<double>(hist.n_errors);
    return hist;
}

CategoryShareTable category_share(const std::vector<MetricItem>& items,
                                  const std::function<std::string(const MetricItem&)>& label,
                                  const std::function<bool(const MetricItem&)>& predicate) {
    CategoryShareTable table;
    std::map<std::string, std::pair<int, int>> counts; // category -> (all, selected)
    for (const auto& item : items) {
        std::string cat = label(item);
        if (cat.empty()) throw std::invalid_argument("unlabelled item: " + item.item_id);
        auto& [all, selected] = counts[cat];
        ++all;
        ++table.n_all;
        if (predicate(item)) {
            ++selected;
            ++table.n_selected;
        }
    }
    for (const auto& [cat, c] : counts) {
        CategoryShareRow row;
        row.category = cat;
        row.share_all = 100.0 * static_cast<double>(c.first) / static_cast<double>(table.n_all);
        row.share_selected =
            table.n_selected > 0
                ? 100.0 * static_cast<double>(c.second) / static_cast<double>(table.n_selected)
                : 0.0;
        table.rows.push_back(std::move(row));
    }
    std::sort(table.rows.begin(), table.rows.end(), [](const auto& a, const auto& b) {
        if (a.share_all != b.share_all) return a.share_all > b.share_all;
        return a.category < b.category;
    });
    return table;
}

DirectionalReport directional_metrics(const std::vector<MetricItem>& items) {
    std::vector<const MetricItem*> pos, neg;
    for (const auto& item : items) {
        if (!item.signed_error || *item.signed_error == 0.0) continue;
        (*item.signed_error > 0 ? pos : neg).push_back(&item);
    }
    return DirectionalReport{directional_row(pos), directional_row(neg)};
}

double spearman_rho(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("ranking length mismatch");
    if (a.size() < 2) throw std::invalid_argument("need at least two ranked values");
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    const std::size_t n = a.size();
    if (integral_ranks(ra) && integral_ranks(rb)) {
        // tie-free shortcut: 1 - 6 sum(d^2) / (n(n^2-1))
        double d2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) d2 += (ra[i] - rb[i]) * (ra[i] - rb[i]);
        const double nn = static_cast<double>(n);
        return 1.0 - 6.0 * d2 / (nn * (nn * nn - 1.0));
    }
    // Pearson on ranks.
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= static_cast<double>(n);
    mb /= static_cast<double>(n);
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (va == 0.0 || vb == 0.0) throw std::invalid_argument("constant ranking has no rho");
    return cov / std::sqrt(va * vb);
}

std::vector<BaselinePrediction> baseline_predictions(const Corpus& corpus, BaselineKind kind,
                                                     BaselineGrouping grouping,
                                                     const ScalingTable* scaling) {
    if (grouping == BaselineGrouping::SplitUnitCluster && scaling == nullptr)
        throw std::invalid_argument("cluster grouping needs a scaling table");

    std::map<GroupKey, std::vector<double>> values;
    std::vector<std::pair<std::string, GroupKey>> item_keys;
    for (const auto& item : corpus.items) {
        GroupKey key{item.dataset, item.split, item.unit, 0};
        if (grouping == BaselineGrouping::SplitUnitCluster) {
            auto it = scaling->key_of.find(item.id);
            if (it == scaling->key_of.end())
                throw std::runtime_error("scaling table does not cover item " + item.id);
            key = it->second;
        }
        auto parsed = parse_temporal(item.expected_raw, item.format);
        values[key].push_back(numeric_view(*parsed.value).magnitude);
        item_keys.push_back({item.id, key});
    }

    std::map<GroupKey, double> constant;
    for (auto& [key, xs] : values) {
        if (kind == BaselineKind::Mean) {
            double sum = 0.0;
            for (double x : xs) sum += x;
            constant[key] = sum / static_cast<double>(xs.size());
        } else {
            std::vector<double> sorted = xs;
            std::sort(sorted.begin(), sorted.end());
            const std::size_t n = sorted.size();
            constant[key] =
                n % 2 == 1 ? sorted[n / 2] : (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;
        }
    }

    std::vector<BaselinePrediction> out;
    out.reserve(corpus.items.size());
    for (std::size_t i = 0; i < corpus.items.size(); ++i) {
        const auto& item = corpus.items[i];
        const double value = constant[item_keys[i].second];
        TemporalValue rendered_value;
        switch (item.format.kind) {
            case FormatKind::Count:
                rendered_value = CountValue{value, item.format.count_unit};
                break;
            case FormatKind::Year4:
                rendered_value = YearValue{static_cast<int>(std::llround(value))};
                break;
            case FormatKind::CalendarDate:
                rendered_value = civil_from_days(std::llround(value));
                break;
            case FormatKind::ClockHms:
            case FormatKind::CompositeXyz:
                rendered_value =
                    ClockDurationValue{static_cast<double>(std::llround(value))};
                break;
        }
        out.push_back({item.id, render_canonical(rendered_value, item.format)});
    }
    return out;
}

Interval smape_reach(double em, double min_err) {
    return Interval{(1.0 - em) * min_err, (1.0 - em) * 100.0};
}

ArithmeticAudit audit_cot_arithmetic(std::string_view trace) {
    ArithmeticAudit audit;
    Scanner sc{trace};
    while (sc.pos < trace.size()) {
        Scanner probe = sc;
        probe.skip_space_parens();
        const std::size_t lhs_start = probe.pos;
        auto first = probe.peek_number(false);
        if (!first) {
            ++sc.pos;
            continue;
        }
        probe.pos = first->second;
        std::vector<double> operands{first->first};
        std::vector<char> ops;
        std::size_t lhs_end = probe.pos;
        while (true) {
            Scanner after = probe;
            after.skip_space_parens();
            auto op = after.peek_op();
            if (!op) break;
            after.pos = op->second;
            after.skip_space_parens();
            auto num = after.peek_number(false);
            if (!num) break;
            after.pos = num->second;
            ops.push_back(op->first);
            operands.push_back(num->first);
            lhs_end = after.pos;
            probe = after;
        }
        if (ops.empty()) {
            sc.pos = first->second;
            continue;
        }
        Scanner eq = probe;
        eq.skip_space_parens();
        if (eq.pos >= trace.size() || trace[eq.pos] != '=') {
            sc.pos = probe.pos;
            continue;
        }
        ++eq.pos;
        eq.skip_space();
        auto stated = eq.peek_number(true);
        if (!stated) {
            sc.pos = eq.pos;
            continue;
        }

        double acc = operands[0];
        bool valid = true;
        for (std::size_t i = 0; i < ops.size(); ++i) {
            switch (ops[i]) {
                case '+': acc += operands[i + 1]; break;
                case '-': acc -= operands[i + 1]; break;
                case '*': acc *= operands[i + 1]; break;
                case '/':
                    if (operands[i + 1] == 0.0) valid = false;
                    else acc /= operands[i + 1];
                    break;
            }
        }
        AuditedExpression expr;
        expr.lhs = trim(trace.substr(lhs_start, lhs_end - lhs_start));
        expr.stated = stated->first;
        expr.recomputed = acc;
        expr.correct = valid && std::abs(acc - stated->first) <=
                                    1e-6 * std::max(1.0, std::abs(stated->first));
        audit.expressions.push_back(std::move(expr));
        sc.pos = stated->second;
    }
    if (!audit.expressions.empty()) {
        int correct = 0;
        for (const auto& e : audit.expressions) correct += e.correct ? 1 : 0;
        audit.correct_fraction =
            static_cast<double>(correct) / static_cast<double>(audit.expressions.size());
    }
    return audit;
}

} // namespace tempeval
