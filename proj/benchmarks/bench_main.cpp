#include <benchmark/benchmark.h>

#include <engrank/ahp.hpp>
#include <engrank/gbrt.hpp>
#include <engrank/importance.hpp>
#include <engrank/survey.hpp>

using namespace engrank;

namespace {

SurveyTable bench_table(std::size_t n_rows) {
    SynthSpec spec;
    spec.n_rows = n_rows;
    spec.seed = 17;
    return synthesize(spec);
}

Ranking bench_ranking() {
    const char* names[] = {"BL", "C-Com", "C-Mgt", "E-Sat", "Age", "E-Int", "Gender"};
    Ranking r;
    int rank = 1;
    for (const char* name : names) {
        RankedFeature f;
        f.feature = name;
        f.mdi_score = 1.0 / rank;
        f.perm_score = f.mdi_score;
        f.mdi_rank = rank;
        f.perm_rank = rank;
        f.avg_rank = rank;
        r.features.push_back(std::move(f));
        ++rank;
    }
    return r;
}

}  // namespace

static void BM_DescriptiveStats(benchmark::State& state) {
    const SurveyTable table = bench_table(1132);
    for (auto _ : state) {
        benchmark::DoNotOptimize(descriptive_stats(table));
    }
}
BENCHMARK(BM_DescriptiveStats);

static void BM_FitEnsemble(benchmark::State& state) {
    const SurveyTable table = bench_table(static_cast<std::size_t>(state.range(0)));
    const RegressionProblem problem = make_target_view(table, EngagementTarget::be);
    TrainConfig tc;
    tc.n_stages = 50;
    tc.max_depth = 3;
    for (auto _ : state) {
        benchmark::DoNotOptimize(fit_ensemble(problem, tc));
    }
}
BENCHMARK(BM_FitEnsemble)->Arg(200)->Arg(600);

static void BM_PermutationImportance(benchmark::State& state) {
    const SurveyTable table = bench_table(400);
    const RegressionProblem problem = make_target_view(table, EngagementTarget::be);
    TrainConfig tc;
    tc.n_stages = 50;
    tc.max_depth = 3;
    const BoostedEnsemble ensemble = fit_ensemble(problem, tc);
    PermutationConfig pc;
    pc.repetitions = 5;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            permutation_importance(ensemble, problem.x, problem.y, pc));
    }
}
BENCHMARK(BM_PermutationImportance);

static void BM_AhpEvaluate(benchmark::State& state) {
    const Ranking ranking = bench_ranking();
    const TierPolicy policy{TierPreset::be_style, {}};
    for (auto _ : state) {
        benchmark::DoNotOptimize(evaluate(ranking, policy));
    }
}
BENCHMARK(BM_AhpEvaluate);

BENCHMARK_MAIN();
