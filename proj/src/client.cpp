#include "tempeval/client.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <iostream>
#include <thread>

#include <httplib.h>

namespace tempeval {

namespace {

using nlohmann::json;

json messages_to_json(const std::vector<Message>& messages) {
    json arr = json::array();
    for (const auto& m : messages) arr.push_back({{"role", m.role}, {"content", m.content}});
    return arr;
}

json build_body(const std::string& model, const PromptBuild& prompt,
                const GenerationSettings& settings, bool fold_prefill) {
    std::vector<Message> messages = prompt.messages;
    if (fold_prefill && !messages.empty() && messages.back().role == "assistant") {
        // fallback for servers that reject a trailing assistant message
        Message prefill = messages.back();
        messages.pop_back();
        for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
            if (it->role == "user") {
                it->content += "\n\n" + prefill.content;
                break;
            }
        }
    }
    json body{{"model", model},
              {"messages", messages_to_json(messages)},
              {"max_tokens", settings.max_new_tokens}};
    if (!settings.stop_on_eos) body["ignore_eos"] = true;
    if (!fold_prefill && prompt.continue_final_message && !prompt.messages.empty() &&
        prompt.messages.back().role == "assistant") {
        body["continue_final_message"] = true;
        body["add_generation_prompt"] = false;
    }
    for (const auto& [key, value] : settings.extra.items()) body[key] = value;
    return body;
}

} // namespace

CompletionResult request_completion(const EndpointConfig& endpoint, const std::string& model,
                                    const PromptBuild& prompt,
                                    const GenerationSettings& settings) {
    httplib::Client client(endpoint.base_url);
    client.set_connection_timeout(endpoint.timeout_seconds);
    client.set_read_timeout(endpoint.timeout_seconds);
    httplib::Headers headers;
    if (!endpoint.api_key.empty())
        headers.insert({"Authorization", "Bearer " + endpoint.api_key});

    CompletionResult result;
    bool fold_prefill = false;
    std::string last_error = "no attempt made";
    int backoff = endpoint.backoff_ms;
    for (int attempt = 1; attempt <= endpoint.max_attempts; ++attempt) {
        result.attempts = attempt;
        const auto body = build_body(model, prompt, settings, fold_prefill);
        const auto start = std::chrono::steady_clock::now();
        auto res = client.Post(endpoint.path, headers, body.dump(), "application/json");
        const auto elapsed = std::chrono::steady_clock::now() - start;
        result.latency_ms = static_cast<int>(
            std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count());

        if (!res) {
            last_error = "connection failed or timed out";
        } else if (res->status == 401 || res->status == 403) {
            throw EndpointError(EndpointError::Kind::Auth,
                                "authentication rejected (HTTP " + std::to_string(res->status) +
                                    ")");
        } else if (res->status == 400 && !fold_prefill && prompt.continue_final_message) {
            std::cerr << "warning: endpoint rejected the assistant continuation; "
                         "folding the prefill into the user turn\n";
            fold_prefill = true;
            result.used_prefill_fallback = true;
            last_error = "HTTP 400 on continuation request";
            continue; // immediate retry with the folded prompt
        } else if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
        } else if (res->status != 200) {
            throw EndpointError(EndpointError::Kind::Server,
                                "endpoint returned HTTP " + std::to_string(res->status));
        } else {
            json reply = json::parse(res->body, nullptr, false);
            if (reply.is_discarded() || !reply.contains("choices") || reply["choices"].empty() ||
                !reply["choices"][0].contains("message") ||
                !reply["choices"][0]["message"].contains("content")) {
                throw EndpointError(EndpointError::Kind::Protocol,
                                    "malformed completion reply");
            }
            result.text = reply["choices"][0]["message"]["content"].get<std::string>();
            return result;
        }
        if (attempt < endpoint.max_attempts) {
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
            backoff = std::min(backoff * 2, 8000);
        }
    }
    throw EndpointError(EndpointError::Kind::Timeout,
                        "gave up after " + std::to_string(endpoint.max_attempts) +
                            " attempts: " + last_error);
}

std::vector<PredictionRecord> generate_predictions(const Corpus& corpus,
                                                   const EndpointConfig& endpoint,
                                                   const std::string& model,
                                                   Prompting prompting,
                                                   const GenerationSettings& settings,
                                                   int concurrency) {
    const auto n = corpus.items.size();
    std::vector<PredictionRecord> records(n);
    std::atomic<std::size_t> next{0};
    std::atomic<int> failures{0};

    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            const QAItem& item = corpus.items[i];
            PredictionRecord rec;
            rec.item_id = item.id;
            rec.model = model;
            rec.prompting = prompting;
            try {
                const auto tmpl = PromptTemplate::defaults(item.dataset, prompting);
                std::vector<QAItem> shots;
                if (prompting == Prompting::FewShot)
                    shots = pick_shots(corpus, item, tmpl.shot_count);
                const auto prompt = build_prompt(item, tmpl, shots);
                auto settings_for_item = settings;
                settings_for_item.stop_on_eos = item.dataset == Dataset::TTQA
                                                    ? settings.stop_on_eos
                                                    : false;
                const auto completion =
                    request_completion(endpoint, model, prompt, settings_for_item);
                rec.raw_response = completion.text;
                rec.latency_ms = completion.latency_ms;
            } catch (const EndpointError& e) {
                ++failures;
                std::cerr << "generation failed for " << item.id << ": " << e.what() << "\n";
            }
            records[i] = std::move(rec);
        }
    };

    std::vector<std::thread> threads;
    const int n_threads = std::max(1, concurrency);
    threads.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (failures > 0)
        std::cerr << failures << " items failed generation and will score unparsable\n";
    return records;
}

} // namespace tempeval
