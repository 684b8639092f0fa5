#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "engrank/gbrt.hpp"
#include "engrank/survey.hpp"

namespace engrank {

enum class ImportanceMethod { mdi, permutation };

struct ImportanceVector {
    ImportanceMethod method = ImportanceMethod::mdi;
    std::vector<std::string> features;  // problem order
    std::vector<double> scores;
    bool all_zero = false;  // MDI only: no split anywhere in the ensemble
};

enum class Scorer { r2, neg_mse };

struct PermutationConfig {
    int repetitions = 10;
    std::uint64_t seed = 0;
    Scorer scorer = Scorer::r2;

    void validate() const;
};

struct RankedFeature {
    std::string feature;
    double mdi_score = 0.0;
    double perm_score = 0.0;
    int mdi_rank = 0;  // dense, 1-based
    int perm_rank = 0;
    double avg_rank = 0.0;
    bool disagreement = false;  // |mdi_rank - perm_rank| > 2
};

struct Ranking {
    std::vector<RankedFeature> features;  // most to least important

    std::string to_csv() const;
    // feature,mdi,permutation,mdi_rank,perm_rank,avg_rank,disagreement_flag
};

// Per-feature sum over all trees of (node n_samples / n_train) * decrease at
// nodes splitting on that feature, averaged over trees, normalized to sum 1.
ImportanceVector mdi(const BoostedEnsemble& ensemble);

// Score drop under seeded column shuffles of the held-out data. Each
// (feature, repetition) pair gets its own RNG stream derived from the seed,
// so the result does not depend on evaluation order.
ImportanceVector permutation_importance(const BoostedEnsemble& ensemble,
                                        const std::vector<std::vector<double>>& x_test,
                                        const std::vector<double>& y_test,
                                        const PermutationConfig& config);

// Raw per-repetition scores in long format: feature,repetition,score.
std::string permutation_detail_csv(const BoostedEnsemble& ensemble,
                                   const std::vector<std::vector<double>>& x_test,
                                   const std::vector<double>& y_test,
                                   const PermutationConfig& config);

// Dense ranks per method; order by average rank, ties by MDI score then
// feature-list position.
Ranking combined_ranking(const ImportanceVector& mdi_vec, const ImportanceVector& perm_vec);

}  // namespace engrank
