#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "engrank/ahp.hpp"
#include "engrank/gbrt.hpp"
#include "engrank/importance.hpp"
#include "engrank/survey.hpp"

namespace engrank {

struct PipelineConfig {
    std::string input_path;          // exactly one of input_path / synth is set
    std::optional<SynthSpec> synth;
    double train_fraction = 0.8;
    TrainConfig train;
    PermutationConfig permutation;
    TierPolicy be_policy{TierPreset::be_style, {}};
    TierPolicy ce_policy{TierPreset::ce_ee_style, {}};
    TierPolicy ee_policy{TierPreset::ce_ee_style, {}};
    std::uint64_t seed = 0;

    const TierPolicy& policy_for(EngagementTarget t) const;
    void validate() const;  // throws Error
};

// Stage seeds are derived from the master seed under fixed labels so any
// stage can be rerun in isolation with an identical outcome.
std::uint64_t synth_seed(std::uint64_t master);
std::uint64_t split_seed(std::uint64_t master);
std::uint64_t train_seed(std::uint64_t master, EngagementTarget t);
std::uint64_t perm_seed(std::uint64_t master, EngagementTarget t);

struct TargetReport {
    EngagementTarget target = EngagementTarget::be;
    LossCurve deviance;
    ImportanceVector mdi;
    ImportanceVector permutation;
    Ranking ranking;
    PairwiseMatrix pairwise;
    AhpResult ahp;  // consistent flag false when the matrix was rejected
};

struct Provenance {
    std::uint64_t seed = 0;
    std::string config_json;  // canonical echo, round-trips through config_from_json
    std::string tool_version;
};

struct PipelineReport {
    StatsTable stats;
    std::array<TargetReport, 3> targets;  // BE, CE, EE
    Provenance provenance;

    bool all_consistent() const;
};

// Config document is a single JSON object; parse(emit(config)) == config.
PipelineConfig config_from_json(const std::string& text);
std::string config_to_json(const PipelineConfig& config);

// Reads a ranking back from the importance CSV layout
// (feature,mdi,permutation,mdi_rank,perm_rank,avg_rank,disagreement_flag).
Ranking parse_ranking_csv(std::istream& in);

PipelineReport run_pipeline(const PipelineConfig& config);

std::string report_to_json(const PipelineReport& report);

// Wide evaluation table: one weight-score row and one percentage row per
// target, empty cells for features outside that target's matrix.
std::string evaluation_matrix_csv(const PipelineReport& report);

// Writes report.json, stats.csv, deviance_/importance_/pairwise_{be,ce,ee}.csv
// and evaluation_matrix.csv. Each file lands via temp + rename so a failed
// run never leaves a partial artifact behind.
void emit_report(const PipelineReport& report, const std::string& out_dir);

// Worker cap for per-target parallelism: ENGAGE_RANK_THREADS clamped to
// [1, 3]; unset or unparseable means 3. Output bytes never depend on it.
int pipeline_thread_cap();

}  // namespace engrank
