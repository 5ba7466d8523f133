// Serial vs OpenMP comparison for the two data-parallel kernels: per-item
// scoring and bootstrap resampling. Build with -DTEMPEVAL_BENCH=ON.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "tempeval/runner.hpp"

using namespace tempeval;

namespace {

struct Workload {
    Corpus corpus;
    ScalingTable scaling;
    std::vector<std::string> responses;
    std::vector<const QAItem*> items;
    std::vector<const std::string*> response_ptrs;
};

Workload make_workload(int n) {
    Workload w;
    w.corpus.content_hash = "bench";
    std::mt19937_64 rng(1234);
    for (int i = 0; i < n; ++i) {
        QAItem item;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%07d", i);
        item.id = std::string("ttqa-head-") + buf;
        item.dataset = Dataset::TTQA;
        item.split = Split::Head;
        item.question = "q";
        item.expected_raw = std::to_string(1 + rng() % 2000);
        item.unit = TemporalUnit::Days;
        item.format = AnswerFormat{FormatKind::Count, TemporalUnit::Days, {}};
        w.corpus.items.push_back(std::move(item));
    }
    w.scaling = build_scaling_table(w.corpus, assign_clusters(w.corpus));
    for (const auto& item : w.corpus.items) {
        switch (rng() % 3) {
            case 0:
                w.responses.push_back("Some reasoning, 12 + 30 = 42 in total.\nFinal Answer: " +
                                      item.expected_raw);
                break;
            case 1:
                w.responses.push_back("Final Answer: " + std::to_string(1 + rng() % 4000));
                break;
            default: w.responses.push_back("Final Answer: somewhere around there"); break;
        }
    }
    for (std::size_t i = 0; i < w.corpus.items.size(); ++i) {
        w.items.push_back(&w.corpus.items[i]);
        w.response_ptrs.push_back(&w.responses[i]);
    }
    return w;
}

void BM_score_items_serial(benchmark::State& state) {
    auto w = make_workload(int(state.range(0)));
    for (auto _ : state) {
        auto scored = score_items(w.items, w.response_ptrs, w.scaling, /*parallel=*/false);
        benchmark::DoNotOptimize(scored);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_score_items_openmp(benchmark::State& state) {
    auto w = make_workload(int(state.range(0)));
    for (auto _ : state) {
        auto scored = score_items(w.items, w.response_ptrs, w.scaling, /*parallel=*/true);
        benchmark::DoNotOptimize(scored);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_bootstrap_serial(benchmark::State& state) {
    std::mt19937_64 rng(99);
    std::vector<double> scores;
    for (int i = 0; i < 48; ++i) scores.push_back(double(rng() % 10000) / 7.0);
    for (auto _ : state) {
        auto ci = bootstrap_ci_serial(scores, 0.95, int(state.range(0)), 42);
        benchmark::DoNotOptimize(ci);
    }
}

void BM_bootstrap_openmp(benchmark::State& state) {
    std::mt19937_64 rng(99);
    std::vector<double> scores;
    for (int i = 0; i < 48; ++i) scores.push_back(double(rng() % 10000) / 7.0);
    for (auto _ : state) {
        auto ci = bootstrap_ci(scores, 0.95, int(state.range(0)), 42);
        benchmark::DoNotOptimize(ci);
    }
}

} // namespace

BENCHMARK(BM_score_items_serial)->Arg(1000)->Arg(10000)->Arg(50000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_score_items_openmp)->Arg(1000)->Arg(10000)->Arg(50000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_bootstrap_serial)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_bootstrap_openmp)->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
