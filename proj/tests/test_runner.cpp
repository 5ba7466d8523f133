#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "tempeval/client.hpp"
#include "tempeval/runner.hpp"

using namespace tempeval;

namespace {

Corpus small_corpus() {
    Corpus corpus;
    corpus.content_hash = "hash";
    auto add = [&](const std::string& id, Dataset d, Split s, const std::string& answer,
                   TemporalUnit unit, const char* format) {
        QAItem item;
        item.id = id;
        item.dataset = d;
        item.split = s;
        item.question = "question for " + id;
        item.expected_raw = answer;
        item.unit = unit;
        item.format = *AnswerFormat::from_string(format);
        corpus.items.push_back(std::move(item));
    };
    add("ttqa-head-1", Dataset::TTQA, Split::Head, "54", TemporalUnit::Years, "# years");
    add("ttqa-head-2", Dataset::TTQA, Split::Head, "16", TemporalUnit::Years, "# years");
    add("ttqa-head-3", Dataset::TTQA, Split::Head, "June 18, 1984", TemporalUnit::Date,
        "%B %d, %Y");
    add("ttqa-head-4", Dataset::TTQA, Split::Head, "30", TemporalUnit::Years, "# years");
    return corpus;
}

std::string gold_response(const QAItem& item) {
    return "Reasoning here.\nFinal Answer: " + item.expected_raw;
}

struct TempPredictions {
    std::filesystem::path path;
    explicit TempPredictions(const std::string& content) {
        path = std::filesystem::temp_directory_path() / "preds_test.jsonl";
        std::ofstream os(path, std::ios::binary);
        os << content;
    }
    ~TempPredictions() { std::filesystem::remove(path); }
};

} // namespace

TEST_CASE("load_predictions accepts the documented schema") {
    TempPredictions file(
        R"({"item_id":"tot-0001","model":"m","prompting":"zero-shot","raw_response":"text"})"
        "\n"
        R"({"item_id":"tot-0002","model":"m","prompting":"few-shot","raw_response":"x","latency_ms":12})"
        "\n");
    auto records = load_predictions(file.path);
    REQUIRE(records.size() == 2);
    CHECK(records[0].item_id == "tot-0001");
    CHECK(records[1].prompting == Prompting::FewShot);
    CHECK(*records[1].latency_ms == 12);
}

TEST_CASE("duplicate predictions name the offending lines") {
    TempPredictions file(
        R"({"item_id":"a","model":"m","prompting":"zero-shot","raw_response":"1"})"
        "\n"
        R"({"item_id":"a","model":"m","prompting":"zero-shot","raw_response":"2"})"
        "\n");
    CHECK_THROWS_WITH_AS(load_predictions(file.path),
                         doctest::Contains("lines 1 and 2"), std::runtime_error);
}

TEST_CASE("malformed prediction lines fail loudly") {
    TempPredictions file("not json\n");
    CHECK_THROWS_WITH_AS(load_predictions(file.path), doctest::Contains("malformed"),
                         std::runtime_error);
}

TEST_CASE("unknown item ids become orphans unless strict") {
    Corpus corpus = small_corpus();
    auto scaling = build_scaling_table(corpus, assign_clusters(corpus));
    std::vector<PredictionRecord> preds{
        {"ttqa-head-1", "m", Prompting::ZeroShot, gold_response(corpus.items[0]), {}},
        {"unknown-item", "m", Prompting::ZeroShot, "Final Answer: 1", {}},
    };
    std::vector<std::string> orphans;
    auto reports = evaluate_run(corpus, preds, scaling, {}, &orphans);
    REQUIRE(orphans.size() == 1);
    CHECK(orphans[0] == "unknown-item");
    REQUIRE(reports.size() == 1);

    EvalOptions strict;
    strict.strict_orphans = true;
    CHECK_THROWS(evaluate_run(corpus, preds, scaling, strict));
}

TEST_CASE("gold predictions score perfectly") {
    Corpus corpus = small_corpus();
    auto scaling = build_scaling_table(corpus, assign_clusters(corpus));
    std::vector<PredictionRecord> preds;
    for (const auto& item : corpus.items)
        preds.push_back({item.id, "m", Prompting::ZeroShot, gold_response(item), {}});
    auto reports = evaluate_run(corpus, preds, scaling, {});
    REQUIRE(reports.size() == 1);
    const auto& summary = reports[0].summary;
    CHECK(summary.n_total == 4);
    CHECK(*summary.em_rate == 100.0);
    CHECK(*summary.smape_mean == 0.0);
    CHECK(*summary.mase_mean == 0.0);
    CHECK(summary.n_smape_defined == 3); // the date item is excluded
    CHECK(reports[0].per_item.size() == corpus.items.size());
}

TEST_CASE("empty responses score unparsable") {
    Corpus corpus = small_corpus();
    auto scaling = build_scaling_table(corpus, assign_clusters(corpus));
    std::vector<PredictionRecord> preds;
    for (const auto& item : corpus.items)
        preds.push_back({item.id, "m", Prompting::ZeroShot, "", {}});
    auto reports = evaluate_run(corpus, preds, scaling, {});
    const auto& summary = reports[0].summary;
    CHECK(*summary.em_rate == 0.0);
    CHECK(*summary.smape_mean == 100.0);
    CHECK(summary.n_mase_defined == 0);
    for (const auto& m : reports[0].per_item) CHECK(m.prediction_unparsable);
}

TEST_CASE("missing predictions are scored, not skipped") {
    Corpus corpus = small_corpus();
    auto scaling = build_scaling_table(corpus, assign_clusters(corpus));
    std::vector<PredictionRecord> preds{
        {"ttqa-head-1", "m", Prompting::ZeroShot, gold_response(corpus.items[0]), {}}};
    auto reports = evaluate_run(corpus, preds, scaling, {});
    REQUIRE(reports.size() == 1);
    CHECK(reports[0].per_item.size() == 4); // full split, three unparsable
    int unparsable = 0;
    for (const auto& m : reports[0].per_item) unparsable += m.prediction_unparsable ? 1 : 0;
    CHECK(unparsable == 3);
}

TEST_CASE("score_prediction keeps the invariants") {
    Corpus corpus = small_corpus();
    auto scaling = build_scaling_table(corpus, assign_clusters(corpus));
    const auto& item = corpus.items[0];

    SUBCASE("exact hit") {
        std::string response = gold_response(item);
        auto m = score_prediction(item, &response, scaling);
        CHECK(m.em == 1);
        CHECK(*m.signed_error == 0.0);
        CHECK(*m.smape == 0.0);
        CHECK(*m.mase == 0.0);
        CHECK_FALSE(m.prediction_unparsable);
    }
    SUBCASE("unparsable prediction on a count item") {
        std::string response = "Final Answer: roughly fifty";
        auto m = score_prediction(item, &response, scaling);
        CHECK(m.em == 0);
        CHECK(m.prediction_unparsable);
        CHECK(*m.smape == 100.0);
        CHECK_FALSE(m.mase.has_value());
        CHECK_FALSE(m.signed_error.has_value());
    }
    SUBCASE("unparsable prediction on a date item") {
        const auto& date_item = corpus.items[2];
        std::string response = "Final Answer: sometime in June";
        auto m = score_prediction(date_item, &response, scaling);
        CHECK(m.prediction_unparsable);
        CHECK(m.smape_undefined_date);
        CHECK_FALSE(m.smape.has_value()); // dates never get an sMAPE, even at 100
    }
    SUBCASE("missing prediction") {
        auto m = score_prediction(item, nullptr, scaling);
        CHECK(m.em == 0);
        CHECK(m.prediction_unparsable);
    }
    SUBCASE("em implies zero errors wherever defined") {
        std::string response = "Final Answer: 054";
        auto m = score_prediction(item, &response, scaling);
        CHECK(m.em == 1); // canonical equality
        CHECK(m.em_raw == 0);
        CHECK(*m.smape == 0.0);
        CHECK(*m.mase == 0.0);
    }
}

TEST_CASE("reports are deterministic and round-trip through JSON") {
    setenv("SOURCE_DATE_EPOCH", "0", 1);
    Corpus corpus = small_corpus();
    auto scaling = build_scaling_table(corpus, assign_clusters(corpus));
    std::vector<PredictionRecord> preds;
    for (const auto& item : corpus.items)
        preds.push_back({item.id, "m", Prompting::ZeroShot,
                         "Final Answer: " + std::string(item.unit == TemporalUnit::Date
                                                            ? "June 19, 1984"
                                                            : "31"),
                         {}});
    auto a = evaluate_run(corpus, preds, scaling, {});
    auto b = evaluate_run(corpus, preds, scaling, {});
    CHECK(report_to_json(a) == report_to_json(b));

    auto parsed = report_from_json(report_to_json(a));
    CHECK(report_to_json(parsed) == report_to_json(a));
    unsetenv("SOURCE_DATE_EPOCH");
}

TEST_CASE("render_report writes every artifact") {
    setenv("SOURCE_DATE_EPOCH", "0", 1);
    Corpus corpus = small_corpus();
    auto scaling = build_scaling_table(corpus, assign_clusters(corpus));
    std::vector<PredictionRecord> preds;
    for (const auto& item : corpus.items)
        preds.push_back({item.id, "m", Prompting::ZeroShot, gold_response(item), {}});
    auto reports = evaluate_run(corpus, preds, scaling, {});
    auto dir = std::filesystem::temp_directory_path() / "tempeval_report_test";
    std::filesystem::remove_all(dir);
    render_report(reports, ReportFormat::Markdown, dir);
    CHECK(std::filesystem::exists(dir / "report.json"));
    CHECK(std::filesystem::exists(dir / "summary.md"));
    CHECK(std::filesystem::exists(dir / "summary.csv"));
    CHECK(std::filesystem::exists(dir / "per_item.csv"));
    CHECK(std::filesystem::exists(dir / "scatter.csv"));
    // no erroneous items: tables still rendered, just empty
    std::ifstream md(dir / "summary.md");
    std::string content((std::istreambuf_iterator<char>(md)), std::istreambuf_iterator<char>());
    CHECK(content.find("Most frequent absolute errors") != std::string::npos);
    std::filesystem::remove_all(dir);
    unsetenv("SOURCE_DATE_EPOCH");
}

TEST_CASE("http client") {
    httplib::Server server;
    std::atomic<int> calls{0};
    nlohmann::json last_body;

    server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
        last_body = nlohmann::json::parse(req.body);
        const int call = ++calls;
        if (req.get_header_value("Authorization") == "Bearer bad-key") {
            res.status = 401;
            return;
        }
        if (last_body["model"] == "flaky" && call == 1) {
            res.status = 429;
            return;
        }
        if (last_body["model"] == "no-continuation" &&
            last_body.contains("continue_final_message")) {
            res.status = 400;
            return;
        }
        nlohmann::json reply{
            {"choices", {{{"message", {{"role", "assistant"}, {"content", " \"ok\", \"answer\": 5}"}}}}}}};
        res.set_content(reply.dump(), "application/json");
    });

    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread server_thread([&]() { server.listen_after_bind(); });
    server.wait_until_ready();

    EndpointConfig endpoint;
    endpoint.base_url = "http://127.0.0.1:" + std::to_string(port);
    endpoint.backoff_ms = 1;

    PromptBuild prompt;
    prompt.messages = {{"system", "s"}, {"user", "u"}, {"assistant", "JSON = {\"explanation\":"}};
    prompt.continue_final_message = true;
    GenerationSettings settings = GenerationSettings::defaults(Dataset::ToT);

    SUBCASE("healthy endpoint returns the completion verbatim") {
        auto result = request_completion(endpoint, "good", prompt, settings);
        CHECK(result.text == " \"ok\", \"answer\": 5}");
        CHECK(result.attempts == 1);
        CHECK(last_body["ignore_eos"] == true);
        CHECK(last_body["continue_final_message"] == true);
        CHECK(last_body["max_tokens"] == 512);
    }
    SUBCASE("429 then success costs one retry") {
        auto result = request_completion(endpoint, "flaky", prompt, settings);
        CHECK(result.attempts == 2);
        CHECK(result.text == " \"ok\", \"answer\": 5}");
    }
    SUBCASE("auth failures are not retried") {
        endpoint.api_key = "bad-key";
        CHECK_THROWS_AS(request_completion(endpoint, "good", prompt, settings), EndpointError);
        try {
            request_completion(endpoint, "good", prompt, settings);
        } catch (const EndpointError& e) {
            CHECK(e.kind() == EndpointError::Kind::Auth);
        }
    }
    SUBCASE("continuation rejection folds the prefill into the user turn") {
        auto result = request_completion(endpoint, "no-continuation", prompt, settings);
        CHECK(result.used_prefill_fallback);
        bool folded = false;
        for (const auto& msg : last_body["messages"]) {
            if (msg["role"] == "user" &&
                msg["content"].get<std::string>().find("JSON = {\"explanation\":") !=
                    std::string::npos)
                folded = true;
            CHECK(msg["role"] != "assistant");
        }
        CHECK(folded);
    }
    SUBCASE("persistent connection failure reports timeout") {
        EndpointConfig dead;
        dead.base_url = "http://127.0.0.1:1"; // nothing listens there
        dead.backoff_ms = 1;
        dead.max_attempts = 2;
        dead.timeout_seconds = 1;
        CHECK_THROWS_AS(request_completion(dead, "good", prompt, settings), EndpointError);
    }

    server.stop();
    server_thread.join();
}

TEST_CASE("mean baseline evaluated end-to-end scores MASE exactly 1 on count items") {
    Corpus corpus;
    corpus.content_hash = "baseline-test";
    std::mt19937_64 rng(113);
    for (int i = 0; i < 40; ++i) {
        QAItem item;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%06d", i);
        item.id = "ttqa-head-" + std::string(buf);
        item.dataset = Dataset::TTQA;
        item.split = Split::Head;
        item.question = "q";
        item.expected_raw = format_double(double(rng() % 100000) / 7.0);
        item.unit = TemporalUnit::Days;
        item.format = *AnswerFormat::from_string("# days");
        corpus.items.push_back(std::move(item));
    }
    auto scaling = build_scaling_table(corpus, assign_clusters(corpus));
    auto baseline = baseline_predictions(corpus, BaselineKind::Mean,
                                         BaselineGrouping::SplitUnitCluster, &scaling);
    std::vector<PredictionRecord> preds;
    for (auto& p : baseline)
        preds.push_back({p.item_id, "baseline", Prompting::ZeroShot,
                         "Final Answer: " + p.rendered, {}});
    auto reports = evaluate_run(corpus, preds, scaling, {});
    REQUIRE(reports.size() == 1);
    int checked = 0;
    for (const auto& m : reports[0].per_item) {
        if (!m.mase) continue; // degenerate denominators are excluded
        CHECK(*m.mase == 1.0);
        ++checked;
    }
    CHECK(checked > 30);
}

TEST_CASE("generation failures produce empty responses, not aborts") {
    Corpus corpus;
    corpus.content_hash = "gen";
    QAItem item;
    item.id = "ttqa-head-000001";
    item.dataset = Dataset::TTQA;
    item.split = Split::Head;
    item.question = "q";
    item.context = "t\tv";
    item.expected_raw = "5";
    item.unit = TemporalUnit::Years;
    item.format = *AnswerFormat::from_string("# years");
    corpus.items.push_back(item);

    EndpointConfig dead;
    dead.base_url = "http://127.0.0.1:1";
    dead.max_attempts = 1;
    dead.backoff_ms = 1;
    dead.timeout_seconds = 1;
    auto records = generate_predictions(corpus, dead, "m", Prompting::ZeroShot,
                                        GenerationSettings::defaults(Dataset::TTQA), 2);
    REQUIRE(records.size() == 1);
    CHECK(records[0].raw_response.empty());
    CHECK(records[0].item_id == "ttqa-head-000001");
}
