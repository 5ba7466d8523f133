#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tempeval/corpus.hpp"
#include "tempeval/prompts.hpp"
#include "tempeval/runner.hpp"

namespace tempeval {

struct EndpointConfig {
    std::string base_url;                       // e.g. http://localhost:8000
    std::string api_key;                        // TEMPEVAL_API_KEY; never logged
    std::string path = "/v1/chat/completions";
    int max_attempts = 3;
    int timeout_seconds = 120;
    int backoff_ms = 500; // doubled per retry, capped at 8 s
};

struct GenerationSettings {
    int max_new_tokens = 512;
    bool stop_on_eos = true; // false maps to ignore_eos on the wire
    nlohmann::json extra;    // sampling fields passed through verbatim

    static GenerationSettings defaults(Dataset dataset) {
        GenerationSettings s;
        s.stop_on_eos = dataset == Dataset::TTQA;
        return s;
    }
};

class EndpointError : public std::runtime_error {
public:
    enum class Kind { Auth, Timeout, Protocol, Server };
    EndpointError(Kind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

struct CompletionResult {
    std::string text;
    int latency_ms = 0;
    int attempts = 1;
    bool used_prefill_fallback = false;
};

// One chat completion with retry and capped exponential backoff. A trailing
// assistant message is sent as a continuation request; servers that reject it
// get the prefill folded into the user turn instead (with a warning).
CompletionResult request_completion(const EndpointConfig& endpoint, const std::string& model,
                                    const PromptBuild& prompt,
                                    const GenerationSettings& settings);

// Prompts and queries the endpoint for every corpus item, with up to
// `concurrency` requests in flight. Failed items are recorded with an empty
// raw_response so evaluation scores them unparsable.
std::vector<PredictionRecord> generate_predictions(const Corpus& corpus,
                                                   const EndpointConfig& endpoint,
                                                   const std::string& model,
                                                   Prompting prompting,
                                                   const GenerationSettings& settings,
                                                   int concurrency);

} // namespace tempeval
