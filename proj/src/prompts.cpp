#include "tempeval/prompts.hpp"

#include <algorithm>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace tempeval {

namespace {

const std::string kTtqaSystem =
    "Given an entity-centric table and corresponding question, answer the question by "
    "providing step-by-step reasoning and then clearly and concisely stating the final "
    "answer using \"Final Answer:\".\n\n"
    "Each table-question pair is presented as a table (identified by \"Table:\") followed "
    "by a question (identified by \"Q:\"). Tables are presented in a linear format, with "
    "columns separated by tabs, rows separated by newlines, and subsections separated by "
    "double newlines. If necessary, assume the current date is December, 2022.";

const std::string kFewShotIntro =
    "\n\nHere is an example that follows these instructions. Answer the provided "
    "questions in a similar format:";

const std::string kTtqaUser = "Table:\n\n{table}\n\n{question}\n\nA: Let's think step by step.";
const std::string kTtqaShotUser = "Table:\n\n{table}\n\nQ: {question}\n\nA:";
const std::string kTtqaShotAssistant = "{answer}";

const std::string kTotUser = "{question}";
const std::string kTotShotUser = "{question}";
const std::string kTotShotAssistant =
    "JSON = {\"explanation\": \"Worked through the steps.\", \"answer\": {answer}}";
const std::string kTotPrefill = "JSON = {\"explanation\":";

// Markers that introduce the output-format instruction inside ToT questions.
constexpr std::string_view kFormatMarkers[] = {"Return your answer as a JSON like:",
                                               "Report the values of"};

const std::string kTotDefaultInstruction =
    "Return your answer as a JSON like: JSON = {\"explanation\": <your step by step "
    "solution>, \"answer\": <answer>}";

std::string replace_all(std::string text, std::string_view token, std::string_view value) {
    size_t pos = 0;
    while ((pos = text.find(token, pos)) != std::string::npos) {
        text.replace(pos, token.size(), value);
        pos += value.size();
    }
    return text;
}

void check_resolved(const std::string& text) {
    for (std::string_view token : {"{table}", "{question}", "{answer}"}) {
        if (text.find(token) != std::string::npos)
            throw std::runtime_error("unresolved placeholder " + std::string(token));
    }
}

std::string fill(const std::string& tmpl, const QAItem& item, const std::string& question) {
    std::string out = replace_all(tmpl, "{table}", item.context ? *item.context : "");
    out = replace_all(out, "{question}", question);
    check_resolved(out);
    return out;
}

// Splits a ToT question into (body, format instruction).
std::pair<std::string, std::string> split_tot_question(const std::string& question) {
    for (std::string_view marker : kFormatMarkers) {
        size_t pos = question.find(marker);
        if (pos != std::string::npos) {
            return {trim(question.substr(0, pos)), trim(question.substr(pos))};
        }
    }
    return {trim(question), kTotDefaultInstruction};
}

} // namespace

std::string_view to_string(Prompting p) {
    return p == Prompting::ZeroShot ? "zero-shot" : "few-shot";
}

std::optional<Prompting> prompting_from_string(std::string_view s) {
    if (s == "zero-shot") return Prompting::ZeroShot;
    if (s == "few-shot") return Prompting::FewShot;
    return std::nullopt;
}

PromptTemplate PromptTemplate::defaults(Dataset dataset, Prompting prompting) {
    PromptTemplate tmpl;
    tmpl.dataset = dataset;
    tmpl.prompting = prompting;
    if (dataset == Dataset::TTQA) {
        tmpl.system_text = kTtqaSystem;
        tmpl.user_template = kTtqaUser;
        tmpl.shot_user_template = kTtqaShotUser;
        tmpl.shot_assistant_template = kTtqaShotAssistant;
    } else {
        tmpl.user_template = kTotUser;
        tmpl.shot_user_template = kTotShotUser;
        tmpl.shot_assistant_template = kTotShotAssistant;
        tmpl.assistant_prefill = kTotPrefill;
        tmpl.continue_final_message = true;
    }
    if (prompting == Prompting::FewShot) tmpl.few_shot_intro = kFewShotIntro;
    return tmpl;
}

std::string PromptTemplate::hash() const {
    std::string blob = std::string(to_string(dataset)) + "\x1f" +
                       std::string(to_string(prompting)) + "\x1f" + system_text + "\x1f" +
                       few_shot_intro + "\x1f" + user_template + "\x1f" + shot_user_template +
                       "\x1f" + shot_assistant_template + "\x1f" + assistant_prefill + "\x1f" +
                       (continue_final_message ? "1" : "0");
    return fnv1a_hex(blob);
}

PromptBuild build_prompt(const QAItem& item, const PromptTemplate& tmpl,
                         const std::vector<QAItem>& shots) {
    if (tmpl.dataset != item.dataset)
        throw std::invalid_argument("template dataset does not match item");
    PromptBuild build;
    build.continue_final_message = tmpl.continue_final_message;

    std::string system = tmpl.system_text;
    std::string target_question = item.question;
    if (item.dataset == Dataset::ToT) {
        auto [body, instruction] = split_tot_question(item.question);
        target_question = body;
        // Semantic items carry their graph as context; it joins the system turn.
        system = item.context ? *item.context + "\n\n" + instruction : instruction;
    }
    if (!tmpl.few_shot_intro.empty() && !shots.empty()) system += tmpl.few_shot_intro;
    build.messages.push_back({"system", system});

    for (const auto& shot : shots) {
        std::string shot_question = shot.question;
        if (shot.dataset == Dataset::ToT) shot_question = split_tot_question(shot.question).first;
        build.messages.push_back({"user", fill(tmpl.shot_user_template, shot, shot_question)});
        std::string assistant =
            replace_all(tmpl.shot_assistant_template, "{answer}", shot.expected_raw);
        check_resolved(assistant);
        build.messages.push_back({"assistant", assistant});
    }

    build.messages.push_back({"user", fill(tmpl.user_template, item, target_question)});
    if (!tmpl.assistant_prefill.empty())
        build.messages.push_back({"assistant", tmpl.assistant_prefill});
    return build;
}

std::vector<QAItem> pick_shots(const Corpus& corpus, const QAItem& target, int count) {
    std::vector<QAItem> pool;
    for (const auto& item : corpus.items) {
        if (item.dataset == target.dataset && item.split == target.split &&
            item.id != target.id)
            pool.push_back(item);
    }
    std::sort(pool.begin(), pool.end(),
              [](const QAItem& a, const QAItem& b) { return a.id < b.id; });
    if (static_cast<int>(pool.size()) > count) pool.resize(size_t(count));
    return pool;
}

std::string prompt_to_json(const PromptBuild& build) {
    nlohmann::json doc;
    doc["continue_final_message"] = build.continue_final_message;
    doc["messages"] = nlohmann::json::array();
    for (const auto& m : build.messages)
        doc["messages"].push_back({{"role", m.role}, {"content", m.content}});
    return doc.dump(2) + "\n";
}

} // namespace tempeval
