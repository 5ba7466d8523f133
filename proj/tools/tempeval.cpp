// tempeval: validate/stats/scale/evaluate/analyze/infer/report/baseline.
// Exit codes: 0 success, 1 usage, 2 data error, 3 endpoint error.

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "tempeval/analysis.hpp"
#include "tempeval/client.hpp"
#include "tempeval/corpus.hpp"
#include "tempeval/runner.hpp"
#include "tempeval/scaling.hpp"

using namespace tempeval;

namespace {

int cmd_validate(const std::string& dataset_path, const std::string& report_path) {
    Corpus corpus = load_dataset(dataset_path, /*strict=*/false);
    std::cout << corpus.items.size() << " items accepted, " << corpus.rejections.size()
              << " rejected (hash " << corpus.content_hash << ")\n";
    for (const auto& r : corpus.rejections)
        std::cout << "  line " << r.line_no << ": " << r.reason << "\n";
    if (!report_path.empty()) {
        write_rejection_report(corpus, report_path);
        std::cout << "rejection report written to " << report_path << "\n";
    }
    return corpus.rejections.empty() ? 0 : 2;
}

int cmd_stats(const std::string& dataset_path) {
    Corpus corpus = load_dataset(dataset_path, /*strict=*/false);
    DatasetStats stats = corpus_stats(corpus);
    std::cout << "dataset,split,unit,count\n";
    for (const auto& [key, count] : stats.counts) {
        std::cout << to_string(key.dataset) << ',' << to_string(key.split) << ','
                  << to_string(key.unit) << ',' << count << "\n";
    }
    for (const auto& [dataset, total] : stats.totals)
        std::cout << to_string(dataset) << ",total,," << total << "\n";
    return 0;
}

int cmd_scale(const std::string& dataset_path, double min_frac, const std::string& out) {
    Corpus corpus = load_dataset(dataset_path);
    auto table = build_scaling_table(corpus, assign_clusters(corpus, min_frac));
    if (out.empty()) {
        write_scaling_csv(table, std::cout);
    } else {
        std::ofstream os(out, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write " + out);
        write_scaling_csv(table, os);
        std::cout << "scaling table with " << table.groups.size() << " groups written to "
                  << out << "\n";
    }
    return 0;
}

int cmd_evaluate(const std::string& dataset_path, const std::string& predictions_path,
                 const std::string& scaling_path, bool strict, const std::string& out,
                 const std::string& format, std::uint64_t seed, bool serial) {
    Corpus corpus = load_dataset(dataset_path, strict);
    ScalingTable scaling;
    if (scaling_path.empty()) {
        scaling = build_scaling_table(corpus, assign_clusters(corpus));
    } else {
        std::ifstream is(scaling_path);
        if (!is) throw std::runtime_error("cannot open scaling table " + scaling_path);
        scaling = scaling_from_csv(corpus, is);
    }
    auto predictions = load_predictions(predictions_path);
    EvalOptions options;
    options.strict_orphans = strict;
    options.parallel = !serial;
    options.seed = seed;
    std::vector<std::string> orphans;
    auto reports = evaluate_run(corpus, predictions, scaling, options, &orphans);
    if (!orphans.empty()) {
        std::cerr << orphans.size() << " predictions referenced unknown items";
        for (size_t i = 0; i < orphans.size() && i < 5; ++i) std::cerr << " " << orphans[i];
        std::cerr << "\n";
    }
    ReportFormat fmt = format == "csv"    ? ReportFormat::Csv
                       : format == "json" ? ReportFormat::Json
                                          : ReportFormat::Markdown;
    render_report(reports, fmt, out);
    for (const auto& r : reports) {
        std::cout << to_string(r.manifest.dataset) << "/" << to_string(r.manifest.split) << " "
                  << r.manifest.model << " " << to_string(r.manifest.prompting)
                  << ": EM " << (r.summary.em_rate ? format_double(*r.summary.em_rate) : "-")
                  << " sMAPE "
                  << (r.summary.smape_mean ? format_double(*r.summary.smape_mean) : "-")
                  << " MASE "
                  << (r.summary.mase_mean ? format_double(*r.summary.mase_mean) : "-") << "\n";
    }
    std::cout << "report written to " << out << "\n";
    return 0;
}

struct ExperimentScore {
    double em = 0.0;
    double smape = 0.0;
    double mase = 0.0;
};

void dataset_level_tables(const std::vector<RunReport>& runs, bool std_over_runs) {
    for (Dataset dataset : {Dataset::ToT, Dataset::TTQA}) {
        std::vector<MetricItem> pooled;
        std::vector<const RunReport*> dataset_runs;
        for (const auto& r : runs) {
            if (r.manifest.dataset != dataset) continue;
            pooled.insert(pooled.end(), r.per_item.begin(), r.per_item.end());
            dataset_runs.push_back(&r);
        }
        if (pooled.empty()) continue;

        const auto hist = abs_error_histogram(pooled);
        std::vector<std::pair<int, double>> top;
        for (const auto& [err, count] : hist.bins) top.push_back({count, err});
        std::sort(top.begin(), top.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        if (top.size() > 5) top.resize(5);
        std::cout << "\n# " << to_string(dataset)
                  << ": most frequent absolute errors over all runs\nabs_error,count,share\n";
        for (const auto& [count, err] : top)
            std::cout << format_double(err) << ',' << count << ','
                      << format_double(hist.shares.at(err)) << "\n";

        const auto dir = directional_metrics(pooled);
        auto opt = [](const std::optional<double>& v) {
            return v ? format_double(*v) : std::string();
        };
        std::cout << "\n# " << to_string(dataset)
                  << ": directional errors (item-level)\nsign,n,smape_mean,smape_std,"
                     "mase_mean,mase_std\n";
        std::cout << "neg," << dir.negative.n << ',' << opt(dir.negative.smape_mean) << ','
                  << opt(dir.negative.smape_std) << ',' << opt(dir.negative.mase_mean) << ','
                  << opt(dir.negative.mase_std) << "\n";
        std::cout << "pos," << dir.positive.n << ',' << opt(dir.positive.smape_mean) << ','
                  << opt(dir.positive.smape_std) << ',' << opt(dir.positive.mase_mean) << ','
                  << opt(dir.positive.mase_std) << "\n";

        if (std_over_runs && dataset_runs.size() > 1) {
            auto spread = [&](auto getter) -> std::string {
                std::vector<double> means;
                for (const auto* r : dataset_runs) {
                    auto row = directional_metrics(r->per_item);
                    auto v = getter(row);
                    if (v) means.push_back(*v);
                }
                if (means.empty()) return ",";
                double mean = 0.0;
                for (double m : means) mean += m;
                mean /= double(means.size());
                double var = 0.0;
                for (double m : means) var += (m - mean) * (m - mean);
                return format_double(mean) + "," +
                       format_double(std::sqrt(var / double(means.size())));
            };
            std::cout << "# run-level spread\nsign,metric,mean,std\n";
            std::cout << "neg,smape,"
                      << spread([](const DirectionalReport& r) { return r.negative.smape_mean; })
                      << "\npos,smape,"
                      << spread([](const DirectionalReport& r) { return r.positive.smape_mean; })
                      << "\nneg,mase,"
                      << spread([](const DirectionalReport& r) { return r.negative.mase_mean; })
                      << "\npos,mase,"
                      << spread([](const DirectionalReport& r) { return r.positive.mase_mean; })
                      << "\n";
        }
    }
}

int cmd_analyze(const std::vector<std::string>& report_paths, bool correlations,
                bool std_over_runs, const std::string& out_dir) {
    std::vector<RunReport> runs;
    for (const auto& path : report_paths) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw std::runtime_error("cannot open report " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        for (auto& run : report_from_json(ss.str())) runs.push_back(std::move(run));
    }
    if (runs.empty()) throw std::runtime_error("no runs found in the given reports");
    std::cout << "model,prompting,dataset,split,em,smape,mase\n";
    for (const auto& r : runs) {
        std::cout << r.manifest.model << ',' << to_string(r.manifest.prompting) << ','
                  << to_string(r.manifest.dataset) << ',' << to_string(r.manifest.split) << ','
                  << (r.summary.em_rate ? format_double(*r.summary.em_rate) : "") << ','
                  << (r.summary.smape_mean ? format_double(*r.summary.smape_mean) : "") << ','
                  << (r.summary.mase_mean ? format_double(*r.summary.mase_mean) : "") << "\n";
    }

    // per-model confidence intervals over run-level scores
    std::map<std::string, std::vector<const RunReport*>> by_model;
    for (const auto& r : runs) by_model[r.manifest.model].push_back(&r);
    std::cout << "\nmodel,metric,mean,ci_low,ci_high,n_runs\n";
    for (const auto& [model, model_runs] : by_model) {
        auto ci_row = [&](const char* metric, auto getter) {
            std::vector<double> scores;
            for (const auto* r : model_runs) {
                auto v = getter(r->summary);
                if (v) scores.push_back(*v);
            }
            if (scores.empty()) return;
            double mean = 0.0;
            for (double s : scores) mean += s;
            mean /= double(scores.size());
            auto ci = bootstrap_ci(scores);
            std::cout << model << ',' << metric << ',' << format_double(mean) << ','
                      << format_double(ci.low) << ',' << format_double(ci.high) << ','
                      << scores.size() << "\n";
        };
        ci_row("em", [](const MetricSummary& s) { return s.em_rate; });
        ci_row("smape", [](const MetricSummary& s) { return s.smape_mean; });
        ci_row("mase", [](const MetricSummary& s) { return s.mase_mean; });
    }

    dataset_level_tables(runs, std_over_runs);

    if (correlations) {
        auto emit_matrix = [&](Dataset dataset, bool pool_splits) {
            // one experiment per (model, prompting); splits pooled by
            // defined-count weighting, or kept separate
            std::map<std::string, ExperimentScore> acc;
            std::map<std::string, std::array<double, 3>> weights;
            for (const auto& r : runs) {
                if (r.manifest.dataset != dataset) continue;
                std::string key = r.manifest.model + "|" +
                                  std::string(to_string(r.manifest.prompting));
                if (!pool_splits) key += "|" + std::string(to_string(r.manifest.split));
                auto& score = acc[key];
                auto& w = weights[key];
                if (r.summary.em_rate) {
                    score.em += *r.summary.em_rate * r.summary.n_total;
                    w[0] += r.summary.n_total;
                }
                if (r.summary.smape_mean) {
                    score.smape += *r.summary.smape_mean * r.summary.n_smape_defined;
                    w[1] += r.summary.n_smape_defined;
                }
                if (r.summary.mase_mean) {
                    score.mase += *r.summary.mase_mean * r.summary.n_mase_defined;
                    w[2] += r.summary.n_mase_defined;
                }
            }
            std::vector<double> em, smape, mase;
            for (auto& [key, score] : acc) {
                const auto& w = weights[key];
                if (w[0] == 0 || w[1] == 0 || w[2] == 0) continue;
                em.push_back(score.em / w[0]);
                smape.push_back(score.smape / w[1]);
                mase.push_back(score.mase / w[2]);
            }
            if (em.size() < 2) {
                std::cout << "# not enough experiments for " << to_string(dataset)
                          << (pool_splits ? " pooled" : " per-split") << " correlations\n";
                return;
            }
            std::vector<RankingComparison> matrix;
            const std::pair<const char*, const std::vector<double>*> metrics[] = {
                {"em", &em}, {"smape", &smape}, {"mase", &mase}};
            for (const auto& [name_a, a] : metrics) {
                for (const auto& [name_b, b] : metrics) {
                    matrix.push_back({name_a, name_b, spearman_rho(*a, *b),
                                      static_cast<int>(a->size())});
                }
            }
            std::ostringstream csv;
            csv << "metric_a,metric_b,rho,n\n";
            for (const auto& cell : matrix) {
                csv << cell.metric_a << ',' << cell.metric_b << ','
                    << format_double(cell.rho) << ',' << cell.n << "\n";
            }
            const std::string label = std::string(to_string(dataset)) +
                                      (pool_splits ? "_pooled" : "_per_split");
            std::cout << "\n# Spearman correlations, " << label << "\n" << csv.str();
            if (!out_dir.empty()) {
                std::filesystem::create_directories(out_dir);
                std::ofstream os(std::filesystem::path(out_dir) / ("corr_" + label + ".csv"),
                                 std::ios::binary);
                os << csv.str();
            }
        };
        for (Dataset dataset : {Dataset::ToT, Dataset::TTQA}) {
            emit_matrix(dataset, true);
            emit_matrix(dataset, false);
        }
    }
    return 0;
}

int cmd_infer(const std::string& dataset_path, const std::string& endpoint_url,
              const std::string& model, const std::string& prompting_name, int max_new_tokens,
              int concurrency, const std::string& extra_json, const std::string& out) {
    Corpus corpus = load_dataset(dataset_path);
    auto prompting = prompting_from_string(prompting_name);
    if (!prompting) throw CLI::ValidationError("prompting must be zero-shot or few-shot");
    EndpointConfig endpoint;
    endpoint.base_url = endpoint_url;
    if (const char* key = std::getenv("TEMPEVAL_API_KEY")) endpoint.api_key = key;
    GenerationSettings settings;
    settings.max_new_tokens = max_new_tokens;
    if (!extra_json.empty()) {
        settings.extra = nlohmann::json::parse(extra_json, nullptr, false);
        if (settings.extra.is_discarded() || !settings.extra.is_object())
            throw std::runtime_error("--extra must be a JSON object");
    }
    auto records = generate_predictions(corpus, endpoint, model, *prompting, settings,
                                        concurrency);
    write_predictions(records, out);
    std::cout << records.size() << " predictions written to " << out << "\n";
    return 0;
}

int cmd_report(const std::string& run_json, const std::string& format,
               const std::string& out) {
    std::ifstream in(run_json, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + run_json);
    std::stringstream ss;
    ss << in.rdbuf();
    auto reports = report_from_json(ss.str());
    ReportFormat fmt = format == "csv"    ? ReportFormat::Csv
                       : format == "json" ? ReportFormat::Json
                                          : ReportFormat::Markdown;
    render_report(reports, fmt, out);
    std::cout << "rendered " << reports.size() << " runs to " << out << "\n";
    return 0;
}

int cmd_baseline(const std::string& dataset_path, const std::string& kind_name,
                 const std::string& grouping_name, const std::string& out) {
    Corpus corpus = load_dataset(dataset_path);
    const BaselineKind kind =
        kind_name == "median" ? BaselineKind::Median : BaselineKind::Mean;
    const BaselineGrouping grouping = grouping_name == "split-unit-cluster"
                                          ? BaselineGrouping::SplitUnitCluster
                                          : BaselineGrouping::SplitUnit;
    ScalingTable table;
    const ScalingTable* table_ptr = nullptr;
    if (grouping == BaselineGrouping::SplitUnitCluster) {
        table = build_scaling_table(corpus, assign_clusters(corpus));
        table_ptr = &table;
    }
    auto baseline = baseline_predictions(corpus, kind, grouping, table_ptr);
    std::vector<PredictionRecord> records;
    const std::string model = "baseline-" + kind_name + "-" + grouping_name;
    for (auto& p : baseline) {
        // rendered through the answer channel the extractors expect
        const bool tot = p.item_id.rfind("tot-", 0) == 0;
        std::string response = tot ? "JSON = {\"explanation\": \"baseline\", \"answer\": " +
                                         (p.rendered.front() == '{' ? p.rendered
                                                                    : "\"" + p.rendered + "\"") +
                                         "}"
                                   : "Final Answer: " + p.rendered;
        if (tot && p.rendered.front() == '{') response = p.rendered;
        records.push_back({p.item_id, model, Prompting::ZeroShot, std::move(response), {}});
    }
    write_predictions(records, out);
    std::cout << records.size() << " baseline predictions written to " << out << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Temporal-answer QA evaluation toolkit"};
    app.require_subcommand(1);

    std::string dataset_path, predictions_path, scaling_path, out, format = "md";
    std::string endpoint_url, model, prompting = "zero-shot", run_json, rejection_report;
    std::string extra_json;
    std::string kind = "mean", grouping = "split-unit";
    std::vector<std::string> report_paths;
    double min_frac = 0.30;
    bool strict = false, correlations = false, serial = false;
    bool directional_over_runs = false;
    int max_new_tokens = 512, concurrency = 4;
    std::uint64_t seed = 42;

    auto* validate = app.add_subcommand("validate", "Validate a dataset file");
    validate->add_option("dataset", dataset_path)->required();
    validate->add_option("--rejections", rejection_report, "Write the rejection report here");

    auto* stats = app.add_subcommand("stats", "Per-unit question counts");
    stats->add_option("dataset", dataset_path)->required();

    auto* scale = app.add_subcommand("scale", "Build the MASE scaling table");
    scale->add_option("dataset", dataset_path)->required();
    scale->add_option("--min-frac", min_frac, "Minimum cluster fraction")->capture_default_str();
    scale->add_option("--out", out, "Output CSV (stdout when omitted)");

    auto* evaluate = app.add_subcommand("evaluate", "Score predictions against a dataset");
    evaluate->add_option("dataset", dataset_path)->required();
    evaluate->add_option("predictions", predictions_path)->required();
    evaluate->add_option("--scaling", scaling_path, "Reuse an exported scaling CSV");
    evaluate->add_flag("--strict", strict, "Fail on invalid rows and orphan predictions");
    evaluate->add_option("--out", out, "Report directory")->required();
    evaluate->add_option("--format", format, "md|csv|json")->capture_default_str();
    evaluate->add_option("--seed", seed, "Bootstrap seed")->capture_default_str();
    evaluate->add_flag("--serial", serial, "Disable the OpenMP scoring path");

    auto* analyze = app.add_subcommand("analyze", "Cross-run tables and rank correlations");
    analyze->add_option("reports", report_paths, "report.json files")->required();
    analyze->add_flag("--correlations", correlations, "Emit Spearman matrices");
    analyze->add_flag("--directional-std-over-runs", directional_over_runs,
                      "Also report the directional spread across runs");
    analyze->add_option("--out", out, "Directory for CSV outputs");

    auto* infer = app.add_subcommand("infer", "Generate predictions via a chat endpoint");
    infer->add_option("dataset", dataset_path)->required();
    infer->add_option("--endpoint", endpoint_url, "Base URL")->required();
    infer->add_option("--model", model)->required();
    infer->add_option("--prompting", prompting, "zero-shot|few-shot")->capture_default_str();
    infer->add_option("--max-new-tokens", max_new_tokens)->capture_default_str();
    infer->add_option("--concurrency", concurrency)->capture_default_str();
    infer->add_option("--extra", extra_json,
                      "JSON object of sampling fields passed through verbatim");
    infer->add_option("--out", out, "Predictions JSONL")->required();

    auto* render = app.add_subcommand("report", "Re-render a stored run report");
    render->add_option("run", run_json, "report.json")->required();
    render->add_option("--format", format, "md|csv|json")->capture_default_str();
    render->add_option("--out", out, "Output directory")->required();

    auto* baseline = app.add_subcommand("baseline", "Emit mean/median baseline predictions");
    baseline->add_option("dataset", dataset_path)->required();
    baseline->add_option("--kind", kind, "mean|median")->capture_default_str();
    baseline->add_option("--grouping", grouping, "split-unit|split-unit-cluster")
        ->capture_default_str();
    baseline->add_option("--out", out, "Predictions JSONL")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (app.got_subcommand(validate)) return cmd_validate(dataset_path, rejection_report);
        if (app.got_subcommand(stats)) return cmd_stats(dataset_path);
        if (app.got_subcommand(scale)) return cmd_scale(dataset_path, min_frac, out);
        if (app.got_subcommand(evaluate))
            return cmd_evaluate(dataset_path, predictions_path, scaling_path, strict, out,
                                format, seed, serial);
        if (app.got_subcommand(analyze))
            return cmd_analyze(report_paths, correlations, directional_over_runs, out);
        if (app.got_subcommand(infer))
            return cmd_infer(dataset_path, endpoint_url, model, prompting, max_new_tokens,
                             concurrency, extra_json, out);
        if (app.got_subcommand(render)) return cmd_report(run_json, format, out);
        if (app.got_subcommand(baseline)) return cmd_baseline(dataset_path, kind, grouping, out);
    } catch (const EndpointError& e) {
        std::cerr << "endpoint error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
