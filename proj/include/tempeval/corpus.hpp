#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tempeval/temporal.hpp"

namespace tempeval {

enum class Dataset { ToT, TTQA };
enum class Split { Arithmetic, Semantic, Head, Tail };

std::string_view to_string(Dataset d);
std::string_view to_string(Split s);
std::optional<Dataset> dataset_from_string(std::string_view s);
std::optional<Split> split_from_string(std::string_view s);

// ToT splits are arithmetic/semantic, TTQA splits are head/tail.
bool split_matches_dataset(Dataset d, Split s);

struct QAItem {
    std::string id;
    Dataset dataset = Dataset::ToT;
    Split split = Split::Arithmetic;
    std::string question;
    std::optional<std::string> context;
    std::string expected_raw;
    TemporalUnit unit = TemporalUnit::Years;
    AnswerFormat format;
};

struct Rejection {
    size_t line_no = 0;
    std::string reason;
};

struct Corpus {
    std::vector<QAItem> items;
    std::string source_path;
    std::string content_hash; // fnv1a-64 of the file bytes, hex
    std::vector<Rejection> rejections; // populated in lenient mode
};

struct StatKey {
    Dataset dataset;
    Split split;
    TemporalUnit unit;
    auto operator<=>(const StatKey&) const = default;
};

struct DatasetStats {
    std::map<StatKey, int> counts;
    std::map<Dataset, int> totals;
};

// Loads a JSONL or CSV corpus (decided by extension). In strict mode the
// first invalid row throws; in lenient mode invalid rows land in
// Corpus::rejections and are skipped.
Corpus load_dataset(const std::filesystem::path& path, bool strict = true);

// Exclusion and consistency checks for one item; empty result means ok.
std::vector<std::string> validate_item(const QAItem& item);

DatasetStats corpus_stats(const Corpus& corpus);

// Rejection report: JSONL of {"line_no": n, "reason": "..."}.
void write_rejection_report(const Corpus& corpus, const std::filesystem::path& out);

std::string fnv1a_hex(std::string_view bytes);

} // namespace tempeval
