#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

#include "tempeval/runner.hpp"

namespace tempeval {

namespace {

std::string fixed2(const std::optional<double>& v) {
    if (!v) return "-";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", *v);
    return buf;
}

std::string csv_opt(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << content;
}

std::string summary_markdown(const std::vector<RunReport>& reports) {
    std::string md = "# Evaluation summary\n";
    std::map<std::pair<Dataset, Split>, std::vector<const RunReport*>> by_split;
    for (const auto& r : reports)
        by_split[{r.manifest.dataset, r.manifest.split}].push_back(&r);
    for (const auto& [key, runs] : by_split) {
        md += "\n## " + std::string(to_string(key.first)) + " / " +
              std::string(to_string(key.second)) + "\n\n";
        md += "| Model | Prompting | EM (%, up) | sMAPE (down) | MASE (down) |\n";
        md += "|---|---|---:|---:|---:|\n";
        for (const auto* r : runs) {
            md += "| " + r->manifest.model + " | " +
                  std::string(to_string(r->manifest.prompting)) + " | " +
                  fixed2(r->summary.em_rate) + " | " + fixed2(r->summary.smape_mean) + " | " +
                  fixed2(r->summary.mase_mean) + " |\n";
        }
        md += "\nDefined errors (EM / sMAPE / MASE):\n\n";
        md += "| Model | Prompting | EM | sMAPE | MASE |\n|---|---|---:|---:|---:|\n";
        for (const auto* r : runs) {
            md += "| " + r->manifest.model + " | " +
                  std::string(to_string(r->manifest.prompting)) + " | " +
                  std::to_string(r->summary.n_em_defined) + " | " +
                  std::to_string(r->summary.n_smape_defined) + " | " +
                  std::to_string(r->summary.n_mase_defined) + " |\n";
        }
        for (const auto* r : runs) {
            md += "\n### " + r->manifest.model + " / " +
                  std::string(to_string(r->manifest.prompting)) + "\n";

            md += "\nMost frequent absolute errors:\n\n| Abs. error | Count | Share (%) |\n|---:|---:|---:|\n";
            std::vector<std::pair<int, double>> top; // (count, err)
            for (const auto& [err, count] : r->analysis.histogram.bins)
                top.push_back({count, err});
            std::sort(top.begin(), top.end(), [](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first > b.first;
                return a.second < b.second;
            });
            if (top.size() > 5) top.resize(5);
            for (const auto& [count, err] : top) {
                md += "| " + format_double(err) + " | " + std::to_string(count) + " | " +
                      fixed2(r->analysis.histogram.shares.at(err)) + " |\n";
            }

            md += "\nShare by answer format (all data vs |e| = 1):\n\n"
                  "| Format | All data (%) | Where |e| = 1 (%) |\n|---|---:|---:|\n";
            for (const auto& row : r->analysis.share_by_format.rows)
                md += "| " + row.category + " | " + fixed2(row.share_all) + " | " +
                      fixed2(row.share_selected) + " |\n";

            md += "\nDirectional errors:\n\n"
                  "| Error | n | sMAPE (std) | MASE (std) |\n|---|---:|---|---|\n";
            const auto& dir = r->analysis.directional;
            md += "| neg. | " + std::to_string(dir.negative.n) + " | " +
                  fixed2(dir.negative.smape_mean) + " (" + fixed2(dir.negative.smape_std) +
                  ") | " + fixed2(dir.negative.mase_mean) + " (" + fixed2(dir.negative.mase_std) +
                  ") |\n";
            md += "| pos. | " + std::to_string(dir.positive.n) + " | " +
                  fixed2(dir.positive.smape_mean) + " (" + fixed2(dir.positive.smape_std) +
                  ") | " + fixed2(dir.positive.mase_mean) + " (" + fixed2(dir.positive.mase_std) +
                  ") |\n";

            const auto& cot = r->analysis.cot_audit;
            if (cot.n_responses_with_math > 0) {
                md += "\nArithmetic audit: " + std::to_string(cot.n_correct) + "/" +
                      std::to_string(cot.n_expressions) + " expressions correct over " +
                      std::to_string(cot.n_responses_with_math) +
                      " responses (mean per-response fraction " +
                      fixed2(cot.mean_correct_fraction) + "; EM=1 " +
                      fixed2(cot.mean_correct_fraction_em1) + ", EM=0 " +
                      fixed2(cot.mean_correct_fraction_em0) + ").\n";
            }
        }
    }
    return md;
}

std::string summary_csv(const std::vector<RunReport>& reports) {
    std::string csv =
        "model,prompting,dataset,split,n_total,n_smape_defined,n_mase_defined,"
        "em,em_raw,smape,mase,em_ci_low,em_ci_high,smape_ci_low,smape_ci_high,"
        "mase_ci_low,mase_ci_high\n";
    for (const auto& r : reports) {
        csv += r.manifest.model + "," + std::string(to_string(r.manifest.prompting)) + "," +
               std::string(to_string(r.manifest.dataset)) + "," +
               std::string(to_string(r.manifest.split)) + "," +
               std::to_string(r.summary.n_total) + "," +
               std::to_string(r.summary.n_smape_defined) + "," +
               std::to_string(r.summary.n_mase_defined) + "," + csv_opt(r.summary.em_rate) +
               "," + csv_opt(r.summary.em_rate_raw) + "," + csv_opt(r.summary.smape_mean) + "," +
               csv_opt(r.summary.mase_mean) + ",";
        auto ci = [&](const std::optional<ConfidenceInterval>& c) {
            return c ? format_double(c->low) + "," + format_double(c->high) : ",";
        };
        csv += ci(r.summary.em_ci) + "," + ci(r.summary.smape_ci) + "," + ci(r.summary.mase_ci) +
               "\n";
    }
    return csv;
}

std::string per_item_csv(const std::vector<RunReport>& reports) {
    std::string csv = "item_id,model,prompting,em,signed_error,smape,mase,flags\n";
    for (const auto& r : reports) {
        for (const auto& m : r.per_item) {
            csv += m.item_id + "," + r.manifest.model + "," +
                   std::string(to_string(r.manifest.prompting)) + "," + std::to_string(m.em) +
                   "," + csv_opt(m.signed_error) + "," + csv_opt(m.smape) + "," +
                   csv_opt(m.mase) + "," + m.flags_str() + "\n";
        }
    }
    return csv;
}

std::string run_prefix(const RunReport& r) {
    return r.manifest.model + "," + std::string(to_string(r.manifest.prompting)) + "," +
           std::string(to_string(r.manifest.dataset)) + "," +
           std::string(to_string(r.manifest.split));
}

std::string histogram_csv(const std::vector<RunReport>& reports) {
    std::string csv = "model,prompting,dataset,split,abs_error,count,share\n";
    for (const auto& r : reports) {
        for (const auto& [err, count] : r.analysis.histogram.bins) {
            csv += run_prefix(r) + "," + format_double(err) + "," + std::to_string(count) +
                   "," + format_double(r.analysis.histogram.shares.at(err)) + "\n";
        }
    }
    return csv;
}

std::string shares_csv(const std::vector<RunReport>& reports) {
    std::string csv = "model,prompting,dataset,split,category,share_all,share_off_by_one\n";
    for (const auto& r : reports) {
        for (const auto& row : r.analysis.share_by_format.rows) {
            csv += run_prefix(r) + "," + row.category + "," + format_double(row.share_all) +
                   "," + format_double(row.share_selected) + "\n";
        }
    }
    return csv;
}

std::string directional_csv(const std::vector<RunReport>& reports) {
    std::string csv =
        "model,prompting,dataset,split,sign,n,smape_mean,smape_std,mase_mean,mase_std\n";
    for (const auto& r : reports) {
        auto row = [&](const char* sign, const DirectionalRow& d) {
            csv += run_prefix(r) + "," + sign + "," + std::to_string(d.n) + "," +
                   csv_opt(d.smape_mean) + "," + csv_opt(d.smape_std) + "," +
                   csv_opt(d.mase_mean) + "," + csv_opt(d.mase_std) + "\n";
        };
        row("neg", r.analysis.directional.negative);
        row("pos", r.analysis.directional.positive);
    }
    return csv;
}

// Run-level points for the EM-vs-sMAPE and EM-vs-MASE scatter plots.
std::string scatter_csv(const std::vector<RunReport>& reports) {
    std::string csv = "model,prompting,dataset,split,em,smape,mase\n";
    for (const auto& r : reports) {
        csv += r.manifest.model + "," + std::string(to_string(r.manifest.prompting)) + "," +
               std::string(to_string(r.manifest.dataset)) + "," +
               std::string(to_string(r.manifest.split)) + "," + csv_opt(r.summary.em_rate) +
               "," + csv_opt(r.summary.smape_mean) + "," + csv_opt(r.summary.mase_mean) + "\n";
    }
    return csv;
}

} // namespace

void render_report(const std::vector<RunReport>& reports, ReportFormat format,
                   const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    write_file(out_dir / "report.json", report_to_json(reports));
    write_file(out_dir / "per_item.csv", per_item_csv(reports));
    write_file(out_dir / "scatter.csv", scatter_csv(reports));
    write_file(out_dir / "histogram.csv", histogram_csv(reports));
    write_file(out_dir / "share_by_format.csv", shares_csv(reports));
    write_file(out_dir / "directional.csv", directional_csv(reports));
    if (format == ReportFormat::Markdown) write_file(out_dir / "summary.md", summary_markdown(reports));
    if (format == ReportFormat::Csv || format == ReportFormat::Markdown)
        write_file(out_dir / "summary.csv", summary_csv(reports));
}

} // namespace tempeval
