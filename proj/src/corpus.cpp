#include "tempeval/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace tempeval {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
}

bool looks_like_number(std::string_view s) {
    std::string t = trim(s);
    if (t.empty()) return false;
    size_t i = (t[0] == '+' || t[0] == '-') ? 1 : 0;
    if (i == t.size()) return false;
    for (; i < t.size(); ++i) {
        char c = t[i];
        if (!std::isdigit(static_cast<unsigned char>(c)) && c != '.' && c != ',') return false;
    }
    return true;
}

// "1999-2003", "1999 – 2003", "3 to 5": two bare numbers joined by a range
// separator. Only meaningful for numeric formats; date patterns use their own
// separators.
bool looks_like_range(std::string_view raw) {
    std::string s = trim(raw);
    static constexpr std::string_view kDashes[] = {"–", "—", "-"};
    for (auto dash : kDashes) {
        size_t pos = s.find(dash);
        while (pos != std::string::npos && pos > 0) {
            std::string_view lhs = std::string_view(s).substr(0, pos);
            std::string_view rhs = std::string_view(s).substr(pos + dash.size());
            if (looks_like_number(lhs) && looks_like_number(rhs)) return true;
            pos = s.find(dash, pos + 1);
        }
    }
    size_t to_pos = lower(s).find(" to ");
    if (to_pos != std::string::npos) {
        if (looks_like_number(std::string_view(s).substr(0, to_pos)) &&
            looks_like_number(std::string_view(s).substr(to_pos + 4)))
            return true;
    }
    return false;
}

bool looks_like_multi_answer(std::string_view raw, const AnswerFormat& fmt) {
    // Commas are structural for %B %d, %Y dates and composite objects.
    if (fmt.kind == FormatKind::CalendarDate || fmt.kind == FormatKind::CompositeXyz)
        return false;
    std::string s = trim(raw);
    if (s.find(';') != std::string::npos) return true;
    if (lower(s).find(" and ") != std::string::npos) return true;
    // A comma not acting as a thousands separator separates answers.
    size_t pos = s.find(',');
    while (pos != std::string::npos) {
        bool thousands = pos + 3 < s.size() && pos > 0 &&
                         std::isdigit(static_cast<unsigned char>(s[pos - 1])) &&
                         std::isdigit(static_cast<unsigned char>(s[pos + 1])) &&
                         std::isdigit(static_cast<unsigned char>(s[pos + 2])) &&
                         std::isdigit(static_cast<unsigned char>(s[pos + 3]));
        if (!thousands) return true;
        pos = s.find(',', pos + 1);
    }
    return false;
}

bool looks_like_frequency(std::string_view raw) {
    std::string s = lower(trim(raw));
    return s.find("every ") != std::string::npos || s.rfind("each ", 0) == 0;
}

struct RowResult {
    std::optional<QAItem> item;
    std::string reason;
};

RowResult item_from_fields(const std::string& id, const std::string& dataset,
                           const std::string& split, const std::string& question,
                           std::optional<std::string> context, const std::string& answer,
                           const std::string& unit, const std::string& format) {
    if (id.empty()) return {std::nullopt, "missing field: id"};
    auto ds = dataset_from_string(dataset);
    if (!ds) return {std::nullopt, "unknown dataset: " + dataset};
    auto sp = split_from_string(split);
    if (!sp) return {std::nullopt, "unknown split: " + split};
    if (!split_matches_dataset(*ds, *sp))
        return {std::nullopt, "split " + split + " does not belong to dataset " + dataset};
    auto un = unit_from_string(unit);
    if (!un) return {std::nullopt, "unknown unit: " + unit};
    auto fmt = AnswerFormat::from_string(format);
    if (!fmt) return {std::nullopt, "unknown format: " + format};
    QAItem item{id, *ds, *sp, question, std::move(context), answer, *un, *fmt};
    auto violations = validate_item(item);
    if (!violations.empty()) {
        std::string joined;
        for (const auto& v : violations) {
            if (!joined.empty()) joined += "; ";
            joined += v;
        }
        return {std::nullopt, joined};
    }
    return {std::move(item), {}};
}

RowResult item_from_json_line(const std::string& line) {
    nlohmann::json row = nlohmann::json::parse(line, nullptr, false);
    if (row.is_discarded() || !row.is_object()) return {std::nullopt, "malformed JSON row"};
    for (const char* key : {"id", "dataset", "split", "question", "answer", "unit", "format"}) {
        if (!row.contains(key) || !row[key].is_string())
            return {std::nullopt, std::string("missing field: ") + key};
    }
    std::optional<std::string> context;
    if (row.contains("context") && row["context"].is_string())
        context = row["context"].get<std::string>();
    return item_from_fields(row["id"], row["dataset"], row["split"], row["question"],
                            std::move(context), row["answer"], row["unit"], row["format"]);
}

std::vector<std::string> parse_csv_row(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    bool in_quotes = false;
    for (size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (c == '"') {
            if (in_quotes && i + 1 < line.size() && line[i + 1] == '"') {
                cell.push_back('"');
                ++i;
            } else {
                in_quotes = !in_quotes;
            }
        } else if (c == ',' && !in_quotes) {
            cells.push_back(cell);
            cell.clear();
        } else {
            cell.push_back(c);
        }
    }
    cells.push_back(cell);
    return cells;
}

} // namespace

std::string_view to_string(Dataset d) { return d == Dataset::ToT ? "ToT" : "TTQA"; }

std::string_view to_string(Split s) {
    switch (s) {
        case Split::Arithmetic: return "arithmetic";
        case Split::Semantic: return "semantic";
        case Split::Head: return "head";
        case Split::Tail: return "tail";
    }
    return "?";
}

std::optional<Dataset> dataset_from_string(std::string_view s) {
    if (s == "ToT") return Dataset::ToT;
    if (s == "TTQA") return Dataset::TTQA;
    return std::nullopt;
}

std::optional<Split> split_from_string(std::string_view s) {
    if (s == "arithmetic") return Split::Arithmetic;
    if (s == "semantic") return Split::Semantic;
    if (s == "head") return Split::Head;
    if (s == "tail") return Split::Tail;
    return std::nullopt;
}

bool split_matches_dataset(Dataset d, Split s) {
    if (d == Dataset::ToT) return s == Split::Arithmetic || s == Split::Semantic;
    return s == Split::Head || s == Split::Tail;
}

std::vector<std::string> validate_item(const QAItem& item) {
    std::vector<std::string> violations;
    std::string answer = trim(item.expected_raw);
    if (answer.empty()) {
        violations.emplace_back("empty answer");
        return violations;
    }
    if (looks_like_frequency(answer)) violations.emplace_back("excluded category: frequency answer");
    bool numeric_format = item.format.kind == FormatKind::Count ||
                          item.format.kind == FormatKind::Year4;
    if (numeric_format && looks_like_range(answer))
        violations.emplace_back("excluded category: range answer");
    if (looks_like_multi_answer(answer, item.format))
        violations.emplace_back("excluded category: multiple answers");
    if (item.format.implied_unit() != item.unit)
        violations.emplace_back("unit " + std::string(to_string(item.unit)) +
                                " inconsistent with format " + item.format.str());
    if (violations.empty()) {
        auto parsed = parse_temporal(answer, item.format);
        if (!parsed.parsed())
            violations.emplace_back("unparsable answer: " + parsed.reason);
    }
    return violations;
}

Corpus load_dataset(const std::filesystem::path& path, bool strict) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    std::string bytes = buffer.str();

    Corpus corpus;
    corpus.source_path = path.string();
    corpus.content_hash = fnv1a_hex(bytes);

    const bool csv = path.extension() == ".csv";
    std::unordered_set<std::string> seen_ids;
    std::istringstream lines(bytes);
    std::string line;
    size_t line_no = 0;
    std::vector<std::string> csv_header;
    while (std::getline(lines, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        RowResult row;
        if (csv) {
            auto cells = parse_csv_row(line);
            if (csv_header.empty()) {
                csv_header = cells;
                static const std::vector<std::string> kExpected = {
                    "id", "dataset", "split", "question", "context", "answer", "unit", "format"};
                if (csv_header != kExpected)
                    throw std::runtime_error(path.string() + ": unexpected CSV header");
                continue;
            }
            if (cells.size() != 8) {
                row = {std::nullopt, "wrong column count"};
            } else {
                std::optional<std::string> context;
                if (!cells[4].empty()) context = cells[4];
                row = item_from_fields(cells[0], cells[1], cells[2], cells[3],
                                       std::move(context), cells[5], cells[6], cells[7]);
            }
        } else {
            row = item_from_json_line(line);
        }
        if (row.item && !seen_ids.insert(row.item->id).second)
            row = {std::nullopt, "duplicate id: " + row.item->id};
        if (!row.item) {
            if (strict)
                throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": " +
                                         row.reason);
            corpus.rejections.push_back({line_no, row.reason});
            continue;
        }
        corpus.items.push_back(std::move(*row.item));
    }
    if (corpus.items.empty()) throw std::runtime_error(path.string() + ": empty corpus");
    return corpus;
}

DatasetStats corpus_stats(const Corpus& corpus) {
    DatasetStats stats;
    for (const auto& item : corpus.items) {
        ++stats.counts[StatKey{item.dataset, item.split, item.unit}];
        ++stats.totals[item.dataset];
    }
    return stats;
}

void write_rejection_report(const Corpus& corpus, const std::filesystem::path& out) {
    std::ofstream os(out, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write rejection report: " + out.string());
    for (const auto& r : corpus.rejections) {
        nlohmann::json row{{"line_no", r.line_no}, {"reason", r.reason}};
        os << row.dump() << "\n";
    }
}

std::string fnv1a_hex(std::string_view bytes) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace tempeval
