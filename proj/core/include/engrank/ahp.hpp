#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "engrank/importance.hpp"

namespace engrank {

// Saaty intensity labels, index 1..9 (index 0 unused).
inline constexpr std::array<std::string_view, 10> kSaatyLabels = {
    "", "Equal", "Weak", "Moderate", "Moderate plus", "Strong",
    "Strong plus", "Demonstrate", "Demonstrate plus", "Extremely preferred"};

std::string_view saaty_label(int intensity);  // throws Error outside 1..9

enum class TierPreset { be_style, ce_ee_style, custom };

// Custom tiering: feature with average rank <= rank_thresholds[t] (and above
// the previous threshold) lands in tier t; the rest land in the final tier.
// scales[i][j - i - 1] holds scale(i, j) for tier pair i < j.
struct CustomTiering {
    std::vector<double> rank_thresholds;  // strictly ascending
    std::vector<std::vector<int>> scales;
};

struct TierPolicy {
    TierPreset preset = TierPreset::be_style;
    CustomTiering custom;  // read only when preset == custom
};

// Tier 0 is the most important. Only the first and last tiers must be
// non-empty: the built-in presets keep their middle tiers (and their scale
// table) even when too few features exist to fill them.
struct TierAssignment {
    std::vector<std::vector<std::string>> tiers;
    std::vector<std::vector<int>> scales;  // scales[i][j - i - 1] = scale(i, j)

    std::size_t tier_count() const noexcept { return tiers.size(); }
    int scale(std::size_t i, std::size_t j) const;  // requires i < j
    void validate() const;  // partition, scale range 2..9, monotone rows
};

struct PairwiseMatrix {
    std::vector<std::string> labels;
    std::vector<std::vector<double>> a;

    std::size_t size() const noexcept { return labels.size(); }
    void validate() const;  // unit diagonal, reciprocity to 1e-12, positivity
    std::string to_csv() const;
};

struct AhpResult {
    std::vector<std::string> features;
    std::vector<double> weight_scores;  // unnormalized row geometric means
    std::vector<double> percentages;    // sum to 100
    double lambda_max = 0.0;
    double ci = 0.0;
    double cr = 0.0;
    bool consistent = false;  // cr < 0.1
};

// Engagement composites (BE, CE, EE) never enter a comparison matrix even
// though they appear as regression features.
Ranking drop_composites(const Ranking& ranking);

TierAssignment assign_tiers(const Ranking& ranking, const TierPolicy& policy);
TierAssignment assign_tiers(const Ranking& ranking, TierPreset preset);

PairwiseMatrix build_pairwise(const TierAssignment& tiers);

// Row geometric means, computed in log space.
std::vector<double> geometric_mean_weights(const PairwiseMatrix& a);

std::vector<double> normalize_weights(const std::vector<double>& weights);

// (1/n) sum_i (A.w)_i / w_i with w normalized to sum 1 internally.
double lambda_max(const PairwiseMatrix& a, const std::vector<double>& weights);

double consistency_index(double lambda, std::size_t n);

// Saaty random index; 0 for n <= 2, defined through n = 10.
double random_index(std::size_t n);

double consistency_ratio(double ci, std::size_t n);

// Full chain: drop composites, tier, build matrix, weigh, check consistency.
// Throws ConsistencyError when CR >= 0.1.
AhpResult evaluate(const Ranking& ranking, const TierPolicy& policy);

// Same chain, but an inconsistent matrix comes back with consistent = false
// instead of throwing. The pipeline reports such targets as rejected.
AhpResult evaluate_unchecked(const Ranking& ranking, const TierPolicy& policy);

}  // namespace engrank
