#include "tempeval/runner.hpp"

#include <algorithm>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace tempeval {

namespace {

using nlohmann::json;

json double_or_null(const std::optional<double>& v) {
    if (!v) return nullptr;
    return *v;
}

std::optional<double> double_from(const json& v) {
    if (v.is_null()) return std::nullopt;
    return v.get<double>();
}

// The extraction step; picks the extractor by dataset.
ExtractResult extract_answer(const QAItem& item, const std::string& raw_response) {
    if (item.dataset == Dataset::TTQA) return extract_final_answer(raw_response);
    return extract_json_answer(raw_response, "JSON = {\"explanation\":");
}

struct RunKey {
    std::string model;
    Prompting prompting;
    Dataset dataset;
    Split split;
    auto operator<=>(const RunKey&) const = default;
};

CotAuditSummary summarize_cot(const std::vector<const std::string*>& responses,
                              const std::vector<MetricItem>& items) {
    CotAuditSummary out;
    double sum_all = 0.0, sum_em1 = 0.0, sum_em0 = 0.0;
    int n_em1 = 0, n_em0 = 0;
    for (std::size_t i = 0; i < responses.size(); ++i) {
        if (responses[i] == nullptr) continue;
        const auto audit = audit_cot_arithmetic(*responses[i]);
        if (!audit.correct_fraction) continue;
        ++out.n_responses_with_math;
        out.n_expressions += static_cast<int>(audit.expressions.size());
        for (const auto& e : audit.expressions) out.n_correct += e.correct ? 1 : 0;
        sum_all += *audit.correct_fraction;
        if (items[i].em == 1) {
            sum_em1 += *audit.correct_fraction;
            ++n_em1;
        } else {
            sum_em0 += *audit.correct_fraction;
            ++n_em0;
        }
    }
    if (out.n_responses_with_math > 0)
        out.mean_correct_fraction = sum_all / out.n_responses_with_math;
    if (n_em1 > 0) out.mean_correct_fraction_em1 = sum_em1 / n_em1;
    if (n_em0 > 0) out.mean_correct_fraction_em0 = sum_em0 / n_em0;
    return out;
}

json interval_to_json(const std::optional<ConfidenceInterval>& ci) {
    if (!ci) return nullptr;
    return json{{"level", ci->level}, {"low", ci->low}, {"high", ci->high}};
}

std::optional<ConfidenceInterval> interval_from_json(const json& v) {
    if (v.is_null()) return std::nullopt;
    return ConfidenceInterval{v["level"].get<double>(), v["low"].get<double>(),
                              v["high"].get<double>()};
}

json summary_to_json(const MetricSummary& s) {
    return json{{"n_total", s.n_total},
                {"n_em_defined", s.n_em_defined},
                {"n_smape_defined", s.n_smape_defined},
                {"n_mase_defined", s.n_mase_defined},
                {"em_rate", double_or_null(s.em_rate)},
                {"em_rate_raw", double_or_null(s.em_rate_raw)},
                {"smape_mean", double_or_null(s.smape_mean)},
                {"mase_mean", double_or_null(s.mase_mean)},
                {"em_ci", interval_to_json(s.em_ci)},
                {"smape_ci", interval_to_json(s.smape_ci)},
                {"mase_ci", interval_to_json(s.mase_ci)}};
}

MetricSummary summary_from_json(const json& v) {
    MetricSummary s;
    s.n_total = v["n_total"].get<int>();
    s.n_em_defined = v["n_em_defined"].get<int>();
    s.n_smape_defined = v["n_smape_defined"].get<int>();
    s.n_mase_defined = v["n_mase_defined"].get<int>();
    s.em_rate = double_from(v["em_rate"]);
    s.em_rate_raw = double_from(v["em_rate_raw"]);
    s.smape_mean = double_from(v["smape_mean"]);
    s.mase_mean = double_from(v["mase_mean"]);
    s.em_ci = interval_from_json(v["em_ci"]);
    s.smape_ci = interval_from_json(v["smape_ci"]);
    s.mase_ci = interval_from_json(v["mase_ci"]);
    return s;
}

json item_to_json(const MetricItem& m) {
    json row{{"item_id", m.item_id},
             {"unit", std::string(to_string(m.unit))},
             {"em", m.em},
             {"em_raw", m.em_raw},
             {"signed_error", double_or_null(m.signed_error)},
             {"smape", double_or_null(m.smape)},
             {"mase", double_or_null(m.mase)},
             {"flags", m.flags_str()}};
    return row;
}

MetricItem item_from_json(const json& v) {
    MetricItem m;
    m.item_id = v["item_id"].get<std::string>();
    m.unit = *unit_from_string(v["unit"].get<std::string>());
    m.em = v["em"].get<int>();
    m.em_raw = v["em_raw"].get<int>();
    m.signed_error = double_from(v["signed_error"]);
    m.smape = double_from(v["smape"]);
    m.mase = double_from(v["mase"]);
    const std::string flags = v["flags"].get<std::string>();
    m.smape_undefined_date = flags.find("smape-undefined-date") != std::string::npos;
    m.mase_degenerate = flags.find("mase-denominator-degenerate") != std::string::npos;
    m.prediction_unparsable = flags.find("prediction-unparsable") != std::string::npos;
    return m;
}

json histogram_to_json(const ErrorHistogram& h) {
    json bins = json::array();
    for (const auto& [err, count] : h.bins)
        bins.push_back({{"abs_error", err}, {"count", count}, {"share", h.shares.at(err)}});
    return json{{"n_errors", h.n_errors}, {"bins", bins}};
}

ErrorHistogram histogram_from_json(const json& v) {
    ErrorHistogram h;
    h.n_errors = v["n_errors"].get<int>();
    for (const auto& bin : v["bins"]) {
        h.bins[bin["abs_error"].get<double>()] = bin["count"].get<int>();
        h.shares[bin["abs_error"].get<double>()] = bin["share"].get<double>();
    }
    return h;
}

json shares_to_json(const CategoryShareTable& t) {
    json rows = json::array();
    for (const auto& row : t.rows)
        rows.push_back({{"category", row.category},
                        {"share_all", row.share_all},
                        {"share_selected", row.share_selected}});
    return json{{"n_all", t.n_all}, {"n_selected", t.n_selected}, {"rows", rows}};
}

CategoryShareTable shares_from_json(const json& v) {
    CategoryShareTable t;
    t.n_all = v["n_all"].get<int>();
    t.n_selected = v["n_selected"].get<int>();
    for (const auto& row : v["rows"])
        t.rows.push_back({row["category"].get<std::string>(), row["share_all"].get<double>(),
                          row["share_selected"].get<double>()});
    return t;
}

json directional_row_to_json(const DirectionalRow& r) {
    return json{{"n", r.n},
                {"smape_mean", double_or_null(r.smape_mean)},
                {"smape_std", double_or_null(r.smape_std)},
                {"mase_mean", double_or_null(r.mase_mean)},
                {"mase_std", double_or_null(r.mase_std)}};
}

DirectionalRow directional_row_from_json(const json& v) {
    DirectionalRow r;
    r.n = v["n"].get<int>();
    r.smape_mean = double_from(v["smape_mean"]);
    r.smape_std = double_from(v["smape_std"]);
    r.mase_mean = double_from(v["mase_mean"]);
    r.mase_std = double_from(v["mase_std"]);
    return r;
}

json cot_to_json(const CotAuditSummary& c) {
    return json{{"n_responses_with_math", c.n_responses_with_math},
                {"n_expressions", c.n_expressions},
                {"n_correct", c.n_correct},
                {"mean_correct_fraction", double_or_null(c.mean_correct_fraction)},
                {"mean_correct_fraction_em1", double_or_null(c.mean_correct_fraction_em1)},
                {"mean_correct_fraction_em0", double_or_null(c.mean_correct_fraction_em0)}};
}

CotAuditSummary cot_from_json(const json& v) {
    CotAuditSummary c;
    c.n_responses_with_math = v["n_responses_with_math"].get<int>();
    c.n_expressions = v["n_expressions"].get<int>();
    c.n_correct = v["n_correct"].get<int>();
    c.mean_correct_fraction = double_from(v["mean_correct_fraction"]);
    c.mean_correct_fraction_em1 = double_from(v["mean_correct_fraction_em1"]);
    c.mean_correct_fraction_em0 = double_from(v["mean_correct_fraction_em0"]);
    return c;
}

} // namespace

std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open predictions file: " + path.string());
    std::vector<PredictionRecord> records;
    std::map<std::tuple<std::string, std::string, Prompting>, size_t> seen;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        json row = json::parse(line, nullptr, false);
        if (row.is_discarded() || !row.is_object())
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": malformed prediction line");
        for (const char* key : {"item_id", "model", "prompting", "raw_response"}) {
            if (!row.contains(key) || !row[key].is_string())
                throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                         ": missing field " + key);
        }
        auto prompting = prompting_from_string(row["prompting"].get<std::string>());
        if (!prompting)
            throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                                     ": unknown prompting " + row["prompting"].get<std::string>());
        PredictionRecord rec;
        rec.item_id = row["item_id"].get<std::string>();
        rec.model = row["model"].get<std::string>();
        rec.prompting = *prompting;
        rec.raw_response = row["raw_response"].get<std::string>();
        if (row.contains("latency_ms") && row["latency_ms"].is_number())
            rec.latency_ms = row["latency_ms"].get<int>();
        auto key = std::make_tuple(rec.item_id, rec.model, rec.prompting);
        auto [it, inserted] = seen.insert({key, line_no});
        if (!inserted)
            throw std::runtime_error(path.string() + ": duplicate prediction for (" +
                                     rec.item_id + ", " + rec.model + ", " +
                                     std::string(to_string(rec.prompting)) + ") on lines " +
                                     std::to_string(it->second) + " and " +
                                     std::to_string(line_no));
        records.push_back(std::move(rec));
    }
    return records;
}

void write_predictions(const std::vector<PredictionRecord>& records,
                       const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write predictions: " + path.string());
    for (const auto& rec : records) {
        json row{{"item_id", rec.item_id},
                 {"model", rec.model},
                 {"prompting", std::string(to_string(rec.prompting))},
                 {"raw_response", rec.raw_response}};
        if (rec.latency_ms) row["latency_ms"] = *rec.latency_ms;
        os << row.dump() << "\n";
    }
}

MetricItem score_prediction(const QAItem& item, const std::string* raw_response,
                            const ScalingTable& scaling) {
    MetricItem m;
    m.item_id = item.id;
    m.unit = item.unit;

    const auto gold = parse_temporal(item.expected_raw, item.format);
    m.gold_view = numeric_view(*gold.value);
    const bool smape_defined_unit = m.gold_view->measure == Measure::CountOf;
    m.smape_undefined_date = !smape_defined_unit;

    ParseOutcome pred = ParseOutcome::failure("missing prediction");
    std::string extracted_text;
    if (raw_response != nullptr) {
        auto extracted = extract_answer(item, *raw_response);
        if (extracted.xyz) {
            if (item.format.kind == FormatKind::CompositeXyz ||
                item.format.kind == FormatKind::ClockHms) {
                const auto& [x, y, z] = *extracted.xyz;
                if (x < 0 || y < 0 || z < 0)
                    pred = ParseOutcome::failure("negative duration component");
                else
                    pred = ParseOutcome::success(composite_to_seconds(x, y, z));
                extracted_text = "{\"X\": " + format_double(x) + ", \"Y\": " + format_double(y) +
                                 ", \"Z\": " + format_double(z) + "}";
            } else {
                pred = ParseOutcome::failure("unexpected composite answer");
            }
        } else if (extracted.answer) {
            extracted_text = *extracted.answer;
            pred = parse_temporal(extracted_text, item.format);
        } else {
            pred = ParseOutcome::failure(extracted.reason);
        }
        m.em_raw = exact_match_raw(extracted_text, item.expected_raw);
    }

    m.em = exact_match(pred, extracted_text, *gold.value, item.expected_raw);
    if (!pred.parsed() && m.em == 1) {
        // Normalized-string fallback hit: the prediction is the gold answer.
        pred = ParseOutcome::success(*gold.value);
    }

    const auto denom_it = scaling.denominator.find(item.id);
    const double denominator =
        denom_it == scaling.denominator.end() ? 0.0 : denom_it->second;
    const bool degenerate = denominator < ScalingTable::kDegenerateEps;

    if (pred.parsed()) {
        m.pred_view = numeric_view(*pred.value);
        m.signed_error = signed_error(*m.pred_view, *m.gold_view);
        m.smape = smape_item(*m.pred_view, *m.gold_view);
        m.mase = mase_item(*m.pred_view, *m.gold_view, denominator);
        m.mase_degenerate = degenerate;
    } else {
        m.prediction_unparsable = true;
        if (smape_defined_unit) m.smape = kSmapeUnparsable;
        m.mase_degenerate = degenerate;
    }
    return m;
}

std::vector<MetricItem> score_items(const std::vector<const QAItem*>& items,
                                    const std::vector<const std::string*>& responses,
                                    const ScalingTable& scaling, bool parallel) {
    if (items.size() != responses.size())
        throw std::invalid_argument("items and responses must align");
    std::vector<MetricItem> out(items.size());
    const auto n = static_cast<std::ptrdiff_t>(items.size());
    if (parallel) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < n; ++i)
            out[size_t(i)] = score_prediction(*items[size_t(i)], responses[size_t(i)], scaling);
    } else {
        for (std::ptrdiff_t i = 0; i < n; ++i)
            out[size_t(i)] = score_prediction(*items[size_t(i)], responses[size_t(i)], scaling);
    }
    return out;
}

std::vector<RunReport> evaluate_run(const Corpus& corpus,
                                    const std::vector<PredictionRecord>& predictions,
                                    const ScalingTable& scaling, const EvalOptions& options,
                                    std::vector<std::string>* orphans) {
    std::map<std::string, const QAItem*> by_id;
    for (const auto& item : corpus.items) by_id[item.id] = &item;

    std::map<RunKey, std::map<std::string, const PredictionRecord*>> runs;
    std::set<std::pair<std::string, Prompting>> run_groups;
    for (const auto& rec : predictions) {
        auto it = by_id.find(rec.item_id);
        if (it == by_id.end()) {
            if (options.strict_orphans)
                throw std::runtime_error("prediction references unknown item " + rec.item_id);
            if (orphans) orphans->push_back(rec.item_id);
            continue;
        }
        const QAItem* item = it->second;
        runs[RunKey{rec.model, rec.prompting, item->dataset, item->split}][rec.item_id] = &rec;
        run_groups.insert({rec.model, rec.prompting});
    }

    std::vector<RunReport> reports;
    for (const auto& [key, preds] : runs) {
        std::vector<const QAItem*> items;
        for (const auto& item : corpus.items) {
            if (item.dataset == key.dataset && item.split == key.split)
                items.push_back(&item);
        }
        std::sort(items.begin(), items.end(),
                  [](const QAItem* a, const QAItem* b) { return a->id < b->id; });
        std::vector<const std::string*> responses(items.size(), nullptr);
        for (std::size_t i = 0; i < items.size(); ++i) {
            auto it = preds.find(items[i]->id);
            if (it != preds.end()) responses[i] = &it->second->raw_response;
        }

        RunReport report;
        report.manifest.model = key.model;
        report.manifest.prompting = key.prompting;
        report.manifest.dataset = key.dataset;
        report.manifest.split = key.split;
        report.manifest.corpus_hash = corpus.content_hash;
        report.manifest.template_hash =
            PromptTemplate::defaults(key.dataset, key.prompting).hash();
        report.manifest.timestamp = current_timestamp();
        report.manifest.seed = options.seed;

        report.per_item = score_items(items, responses, scaling, options.parallel);
        report.summary = aggregate(report.per_item);

        // Item-level percentile-bootstrap CIs on the defined values.
        std::vector<double> ems, smapes, mases;
        for (const auto& m : report.per_item) {
            ems.push_back(100.0 * m.em);
            if (m.smape) smapes.push_back(*m.smape);
            if (m.mase) mases.push_back(*m.mase);
        }
        if (!ems.empty()) report.summary.em_ci = bootstrap_ci(ems, 0.95, 10000, options.seed);
        if (!smapes.empty())
            report.summary.smape_ci = bootstrap_ci(smapes, 0.95, 10000, options.seed);
        if (!mases.empty())
            report.summary.mase_ci = bootstrap_ci(mases, 0.95, 10000, options.seed);

        report.analysis.histogram = abs_error_histogram(report.per_item);
        std::map<std::string, std::string> format_of;
        for (const auto* item : items) format_of[item->id] = item->format.str();
        report.analysis.share_by_format = category_share(
            report.per_item,
            [&](const MetricItem& m) { return format_of.at(m.item_id); });
        report.analysis.directional = directional_metrics(report.per_item);
        report.analysis.cot_audit = summarize_cot(responses, report.per_item);

        reports.push_back(std::move(report));
    }
    return reports;
}

std::string current_timestamp() {
    std::time_t t;
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
        t = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
    } else {
        t = std::time(nullptr);
    }
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string report_to_json(const std::vector<RunReport>& reports) {
    json doc;
    doc["schema_version"] = kReportSchemaVersion;
    doc["runs"] = json::array();
    for (const auto& report : reports) {
        json run;
        run["manifest"] = json{{"model", report.manifest.model},
                               {"prompting", std::string(to_string(report.manifest.prompting))},
                               {"dataset", std::string(to_string(report.manifest.dataset))},
                               {"split", std::string(to_string(report.manifest.split))},
                               {"corpus_hash", report.manifest.corpus_hash},
                               {"template_hash", report.manifest.template_hash},
                               {"timestamp", report.manifest.timestamp},
                               {"seed", report.manifest.seed}};
        run["summary"] = summary_to_json(report.summary);
        run["per_item"] = json::array();
        for (const auto& m : report.per_item) run["per_item"].push_back(item_to_json(m));
        run["analysis"] = json{{"abs_error_histogram", histogram_to_json(report.analysis.histogram)},
                               {"share_by_format", shares_to_json(report.analysis.share_by_format)},
                               {"directional",
                                json{{"positive", directional_row_to_json(report.analysis.directional.positive)},
                                     {"negative", directional_row_to_json(report.analysis.directional.negative)}}},
                               {"cot_audit", cot_to_json(report.analysis.cot_audit)}};
        doc["runs"].push_back(std::move(run));
    }
    return doc.dump(2) + "\n";
}

std::vector<RunReport> report_from_json(const std::string& text) {
    json doc = json::parse(text);
    if (!doc.contains("schema_version") || doc["schema_version"].get<int>() != kReportSchemaVersion)
        throw std::runtime_error("unsupported report schema version");
    std::vector<RunReport> reports;
    for (const auto& run : doc["runs"]) {
        RunReport report;
        const auto& man = run["manifest"];
        report.manifest.model = man["model"].get<std::string>();
        report.manifest.prompting = *prompting_from_string(man["prompting"].get<std::string>());
        report.manifest.dataset = *dataset_from_string(man["dataset"].get<std::string>());
        report.manifest.split = *split_from_string(man["split"].get<std::string>());
        report.manifest.corpus_hash = man["corpus_hash"].get<std::string>();
        report.manifest.template_hash = man["template_hash"].get<std::string>();
        report.manifest.timestamp = man["timestamp"].get<std::string>();
        report.manifest.seed = man["seed"].get<std::uint64_t>();
        report.summary = summary_from_json(run["summary"]);
        for (const auto& item : run["per_item"]) report.per_item.push_back(item_from_json(item));
        report.analysis.histogram = histogram_from_json(run["analysis"]["abs_error_histogram"]);
        report.analysis.share_by_format = shares_from_json(run["analysis"]["share_by_format"]);
        report.analysis.directional.positive =
            directional_row_from_json(run["analysis"]["directional"]["positive"]);
        report.analysis.directional.negative =
            directional_row_from_json(run["analysis"]["directional"]["negative"]);
        report.analysis.cot_audit = cot_from_json(run["analysis"]["cot_audit"]);
        reports.push_back(std::move(report));
    }
    return reports;
}

} // namespace tempeval
