#include <benchmark/benchmark.h>

#include "schemalink/focus.hpp"
#include "schemalink/ground_truth.hpp"
#include "schemalink/head.hpp"
#include "schemalink/metrics.hpp"
#include "schemalink/rng.hpp"
#include "schemalink/schema.hpp"
#include "schemalink/scorers.hpp"

using namespace schemalink;

namespace {

DatabaseSchema wide_schema(std::size_t tables, std::size_t columns) {
    DatabaseSchema schema;
    schema.db_id = "bench";
    for (std::size_t t = 0; t < tables; ++t) {
        Table table;
        table.name = "relation_" + std::to_string(t);
        for (std::size_t c = 0; c < columns; ++c) {
            table.columns.push_back(
                {"attribute_" + std::to_string(t) + "_" + std::to_string(c), ColumnType::Text});
        }
        schema.tables.push_back(std::move(table));
    }
    return schema;
}

}  // namespace

static void BM_ChunkSchema(benchmark::State& state) {
    DatabaseSchema schema = wide_schema(state.range(0), 10);
    for (auto _ : state) {
        auto chunks = chunk_schema(schema, "which attributes matter?", 1500);
        benchmark::DoNotOptimize(chunks);
    }
}
BENCHMARK(BM_ChunkSchema)->Arg(8)->Arg(16)->Arg(32);

static void BM_ExtractGroundTruth(benchmark::State& state) {
    DatabaseSchema schema = wide_schema(4, 8);
    std::string sql =
        "SELECT T1.attribute_0_1, COUNT(*) FROM relation_0 AS T1 JOIN relation_1 AS T2 "
        "ON T1.attribute_0_0 = T2.attribute_1_0 WHERE T1.attribute_0_2 > 5 "
        "GROUP BY T1.attribute_0_1 ORDER BY COUNT(*) DESC LIMIT 3";
    for (auto _ : state) {
        SchemaLink link = extract_ground_truth(sql, schema);
        benchmark::DoNotOptimize(link);
    }
}
BENCHMARK(BM_ExtractGroundTruth);

static void BM_HeadForwardBackward(benchmark::State& state) {
    const std::size_t pairs = state.range(0);
    const std::size_t dim = 64;
    SplitMix64 rng(1);
    std::vector<int> tokens;
    for (std::size_t i = 0; i < pairs; ++i) {
        tokens.push_back(0);
        tokens.push_back(1);
        tokens.push_back(2);
    }
    Matrix hidden(tokens.size(), dim);
    for (double& v : hidden.data()) v = rng.next_double() - 0.5;
    TokenSequence seq = TokenSequence::from_tokens(tokens, 1, 2, std::move(hidden));
    HeadParameters params;
    params.weight = Matrix(2 * dim, 5);
    for (double& v : params.weight.data()) v = rng.next_double() - 0.5;
    params.bias.assign(5, 0.0);
    Matrix labels(pairs, 5);
    for (double& v : labels.data()) v = rng.next_below(2) ? 1.0 : 0.0;

    for (auto _ : state) {
        BceResult result = bce_loss(forward(seq, params), labels);
        benchmark::DoNotOptimize(result);
    }
}
BENCHMARK(BM_HeadForwardBackward)->Arg(16)->Arg(64)->Arg(256);

static void BM_RankingMetrics(benchmark::State& state) {
    SplitMix64 rng(2);
    std::vector<ScoredLabel> scores;
    for (int i = 0; i < state.range(0); ++i) {
        scores.push_back({rng.next_double(), rng.next_below(4) == 0});
    }
    scores[0].label = true;
    scores[1].label = false;
    for (auto _ : state) {
        double roc = roc_auc(scores);
        PrAucResult pr = pr_auc(scores);
        benchmark::DoNotOptimize(roc);
        benchmark::DoNotOptimize(pr);
    }
}
BENCHMARK(BM_RankingMetrics)->Arg(1000)->Arg(10000);

BENCHMARK_MAIN();
