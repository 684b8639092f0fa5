#include "engrank/importance.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "engrank/csv.hpp"
#include "engrank/errors.hpp"
#include "engrank/rng.hpp"

namespace engrank {

namespace {

double score_predictions(Scorer scorer, const std::vector<double>& y,
                         const std::vector<double>& y_hat) {
    if (scorer == Scorer::neg_mse) return -mse(y, y_hat);

    const double mean = std::accumulate(y.begin(), y.end(), 0.0) /
                        static_cast<double>(y.size());
    double sst = 0.0;
    double sse = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        sst += (y[i] - mean) * (y[i] - mean);
        sse += (y[i] - y_hat[i]) * (y[i] - y_hat[i]);
    }
    if (sst == 0.0) {
        throw DataError("r2 is undefined on a zero-variance target; use the neg_mse scorer");
    }
    return 1.0 - sse / sst;
}

std::uint64_t column_rep_seed(std::uint64_t master, std::size_t feature, int repetition) {
    return derive_seed(master, "f" + std::to_string(feature) + ":r" + std::to_string(repetition));
}

// score after one seeded shuffle of column j only
double shuffled_score(const BoostedEnsemble& ensemble,
                      const std::vector<std::vector<double>>& x_test,
                      const std::vector<double>& y_test, Scorer scorer,
                      std::size_t feature, std::uint64_t seed) {
    std::vector<double> column(x_test.size());
    for (std::size_t i = 0; i < x_test.size(); ++i) column[i] = x_test[i][feature];
    Rng rng(seed);
    shuffle(column, rng);

    std::vector<std::vector<double>> permuted = x_test;
    for (std::size_t i = 0; i < permuted.size(); ++i) permuted[i][feature] = column[i];
    return score_predictions(scorer, y_test, predict_ensemble(ensemble, permuted));
}

// dense 1-based ranks, higher score = better rank
std::vector<int> dense_ranks(const std::vector<double>& scores) {
    std::vector<double> distinct = scores;
    std::sort(distinct.begin(), distinct.end(), std::greater<>());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

    std::vector<int> ranks(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const auto at = std::lower_bound(distinct.begin(), distinct.end(), scores[i],
                                         std::greater<>());
        ranks[i] = static_cast<int>(at - distinct.begin()) + 1;
    }
    return ranks;
}

}  // namespace

void PermutationConfig::validate() const {
    if (repetitions < 1) throw Error("permutation config: repetitions must be >= 1");
}

ImportanceVector mdi(const BoostedEnsemble& ensemble) {
    if (ensemble.trees.empty() || ensemble.feature_names.empty()) {
        throw Error("mdi: ensemble is not fitted");
    }

    ImportanceVector out;
    out.method = ImportanceMethod::mdi;
    out.features = ensemble.feature_names;
    out.scores.assign(out.features.size(), 0.0);

    for (const auto& tree : ensemble.trees) {
        const auto n_root = static_cast<double>(tree.nodes.front().n_samples);
        for (const auto& node : tree.nodes) {
            if (node.is_leaf()) continue;
            out.scores[node.feature] +=
                static_cast<double>(node.n_samples) / n_root * node.decrease;
        }
    }

    double total = 0.0;
    for (double& s : out.scores) {
        s /= static_cast<double>(ensemble.trees.size());
        total += s;
    }
    if (total > 0.0) {
        for (double& s : out.scores) s /= total;
    } else {
        out.all_zero = true;
        std::fill(out.scores.begin(), out.scores.end(), 0.0);
    }
    return out;
}

ImportanceVector permutation_importance(const BoostedEnsemble& ensemble,
                                        const std::vector<std::vector<double>>& x_test,
                                        const std::vector<double>& y_test,
                                        const PermutationConfig& config) {
    config.validate();
    if (ensemble.feature_names.empty()) throw Error("permutation: ensemble is not fitted");
    if (x_test.size() != y_test.size()) throw Error("permutation: row count mismatch");
    if (y_test.size() < 2) throw DataError("permutation: need at least 2 test rows");

    const double baseline =
        score_predictions(config.scorer, y_test, predict_ensemble(ensemble, x_test));

    ImportanceVector out;
    out.method = ImportanceMethod::permutation;
    out.features = ensemble.feature_names;
    out.scores.assign(out.features.size(), 0.0);

    // mean of per-repetition drops, not drop of the mean: an untouched
    // prediction gives baseline - s_kj == 0 exactly
    for (std::size_t j = 0; j < out.features.size(); ++j) {
        double drop_sum = 0.0;
        for (int k = 0; k < config.repetitions; ++k) {
            const double s = shuffled_score(ensemble, x_test, y_test, config.scorer, j,
                                            column_rep_seed(config.seed, j, k));
            drop_sum += baseline - s;
        }
        out.scores[j] = drop_sum / static_cast<double>(config.repetitions);
    }
    return out;
}

std::string permutation_detail_csv(const BoostedEnsemble& ensemble,
                                   const std::vector<std::vector<double>>& x_test,
                                   const std::vector<double>& y_test,
                                   const PermutationConfig& config) {
    config.validate();
    if (ensemble.feature_names.empty()) throw Error("permutation: ensemble is not fitted");
    if (x_test.size() != y_test.size()) throw Error("permutation: row count mismatch");
    if (y_test.size() < 2) throw DataError("permutation: need at least 2 test rows");

    const double baseline =
        score_predictions(config.scorer, y_test, predict_ensemble(ensemble, x_test));

    std::string out = "feature,repetition,score,drop\n";
    for (std::size_t j = 0; j < ensemble.feature_names.size(); ++j) {
        for (int k = 0; k < config.repetitions; ++k) {
            const double s = shuffled_score(ensemble, x_test, y_test, config.scorer, j,
                                            column_rep_seed(config.seed, j, k));
            out += join_csv_row({ensemble.feature_names[j], std::to_string(k),
                                 format_double(s), format_double(baseline - s)});
        }
    }
    return out;
}

Ranking combined_ranking(const ImportanceVector& mdi_vec, const ImportanceVector& perm_vec) {
    if (mdi_vec.features != perm_vec.features) {
        throw Error("combined_ranking: feature sets differ");
    }

    const std::vector<int> mdi_ranks = dense_ranks(mdi_vec.scores);
    const std::vector<int> perm_ranks = dense_ranks(perm_vec.scores);

    Ranking ranking;
    ranking.features.resize(mdi_vec.features.size());
    for (std::size_t i = 0; i < mdi_vec.features.size(); ++i) {
        RankedFeature& f = ranking.features[i];
        f.feature = mdi_vec.features[i];
        f.mdi_score = mdi_vec.scores[i];
        f.perm_score = perm_vec.scores[i];
        f.mdi_rank = mdi_ranks[i];
        f.perm_rank = perm_ranks[i];
        f.avg_rank = (mdi_ranks[i] + perm_ranks[i]) / 2.0;
        f.disagreement = std::abs(mdi_ranks[i] - perm_ranks[i]) > 2;
    }

    std::vector<std::size_t> order(ranking.features.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& fa = ranking.features[a];
        const auto& fb = ranking.features[b];
        if (fa.avg_rank != fb.avg_rank) return fa.avg_rank < fb.avg_rank;
        if (fa.mdi_score != fb.mdi_score) return fa.mdi_score > fb.mdi_score;
        return a < b;  // feature-list position
    });

    Ranking sorted;
    sorted.features.reserve(order.size());
    for (const std::size_t i : order) sorted.features.push_back(ranking.features[i]);
    return sorted;
}

std::string Ranking::to_csv() const {
    std::string out = "feature,mdi,permutation,mdi_rank,perm_rank,avg_rank,disagreement_flag\n";
    for (const auto& f : features) {
        out += join_csv_row({f.feature, format_double(f.mdi_score),
                             format_double(f.perm_score), std::to_string(f.mdi_rank),
                             std::to_string(f.perm_rank), format_double(f.avg_rank),
                             f.disagreement ? "1" : "0"});
    }
    return out;
}

}  // namespace engrank
