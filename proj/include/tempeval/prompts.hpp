#pragma once

#include <string>
#include <vector>

#include "tempeval/corpus.hpp"

namespace tempeval {

enum class Prompting { ZeroShot, FewShot };

std::string_view to_string(Prompting p);
std::optional<Prompting> prompting_from_string(std::string_view s);

struct Message {
    std::string role; // system | user | assistant
    std::string content;
    bool operator==(const Message&) const = default;
};

// Chat-template skeleton per dataset. ToT sequences end with an assistant
// prefill that the model continues; TTQA sequences end with the user turn.
struct PromptTemplate {
    Dataset dataset = Dataset::TTQA;
    Prompting prompting = Prompting::ZeroShot;
    std::string system_text;              // TTQA instructions; empty for ToT
    std::string few_shot_intro;           // appended to the system text
    std::string user_template;            // {table} {question} placeholders
    std::string shot_user_template;       // {table} {question}
    std::string shot_assistant_template;  // {answer}
    std::string assistant_prefill;
    bool continue_final_message = false;
    int shot_count = 3;

    static PromptTemplate defaults(Dataset dataset, Prompting prompting);
    std::string hash() const;
};

struct PromptBuild {
    std::vector<Message> messages;
    bool continue_final_message = false;
};

// Substitutes the item (and few-shot examples) into the template. For ToT the
// JSON-format instruction embedded in the question moves to the system turn
// and the assistant prefill is appended. Throws on unresolved placeholders.
PromptBuild build_prompt(const QAItem& item, const PromptTemplate& tmpl,
                         const std::vector<QAItem>& shots = {});

// Deterministic shot selection: the first `count` items of the same
// (dataset, split) by id, excluding the target.
std::vector<QAItem> pick_shots(const Corpus& corpus, const QAItem& target, int count);

// Stable JSON rendering of a built prompt (used for golden files).
std::string prompt_to_json(const PromptBuild& build);

} // namespace tempeval
