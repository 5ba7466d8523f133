#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tempeval/analysis.hpp"
#include "tempeval/corpus.hpp"
#include "tempeval/metrics.hpp"
#include "tempeval/prompts.hpp"
#include "tempeval/scaling.hpp"

namespace tempeval {

inline constexpr int kReportSchemaVersion = 1;

struct PredictionRecord {
    std::string item_id;
    std::string model;
    Prompting prompting = Prompting::ZeroShot;
    std::string raw_response;
    std::optional<int> latency_ms;
};

// JSONL loader; throws on malformed lines and duplicate
// (item_id, model, prompting) keys, naming the offending line numbers.
std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path);

void write_predictions(const std::vector<PredictionRecord>& records,
                       const std::filesystem::path& path);

struct RunManifest {
    std::string model;
    Prompting prompting = Prompting::ZeroShot;
    Dataset dataset = Dataset::ToT;
    Split split = Split::Arithmetic;
    std::string corpus_hash;
    std::string template_hash;
    std::string timestamp; // ISO-8601 UTC; SOURCE_DATE_EPOCH wins when set
    std::uint64_t seed = 42;
};

struct CotAuditSummary {
    int n_responses_with_math = 0;
    int n_expressions = 0;
    int n_correct = 0;
    std::optional<double> mean_correct_fraction;       // over responses with math
    std::optional<double> mean_correct_fraction_em1;   // split by final-answer EM
    std::optional<double> mean_correct_fraction_em0;
};

struct RunAnalysis {
    ErrorHistogram histogram;
    CategoryShareTable share_by_format;
    DirectionalReport directional;
    CotAuditSummary cot_audit;
};

struct RunReport {
    RunManifest manifest;
    MetricSummary summary;
    std::vector<MetricItem> per_item; // sorted by item_id; one per corpus item
    RunAnalysis analysis;
};

struct EvalOptions {
    bool strict_orphans = false; // fail on predictions whose item_id is unknown
    bool parallel = true;
    std::uint64_t seed = 42;
};

// Scores one prediction against its item. raw_response == nullptr marks a
// missing prediction (scored unparsable).
MetricItem score_prediction(const QAItem& item, const std::string* raw_response,
                            const ScalingTable& scaling);

// Per-item scoring kernel over aligned item/response arrays; the parallel
// path is OpenMP over items with index-deterministic merge.
std::vector<MetricItem> score_items(const std::vector<const QAItem*>& items,
                                    const std::vector<const std::string*>& responses,
                                    const ScalingTable& scaling, bool parallel);

// Full pipeline: group predictions into (model, prompting, dataset, split)
// runs, score every corpus item of the split, aggregate, and attach the
// analysis tables. Unknown item_ids go to `orphans` (or throw when strict).
std::vector<RunReport> evaluate_run(const Corpus& corpus,
                                    const std::vector<PredictionRecord>& predictions,
                                    const ScalingTable& scaling, const EvalOptions& options = {},
                                    std::vector<std::string>* orphans = nullptr);

enum class ReportFormat { Markdown, Csv, Json };

// report.json plus summary/per-item/scatter side files, depending on format.
void render_report(const std::vector<RunReport>& reports, ReportFormat format,
                   const std::filesystem::path& out_dir);

std::string report_to_json(const std::vector<RunReport>& reports);
std::vector<RunReport> report_from_json(const std::string& text);

std::string current_timestamp(); // honors SOURCE_DATE_EPOCH

} // namespace tempeval
