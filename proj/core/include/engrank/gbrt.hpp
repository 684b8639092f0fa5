#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "engrank/survey.hpp"

namespace engrank {

struct SplitCandidate {
    std::size_t feature = 0;
    double threshold = 0.0;
    double decrease = 0.0;  // parent SSE - (left SSE + right SSE), >= 0
    std::size_t n_left = 0;
    std::size_t n_right = 0;
};

// Nodes stored in a flat vector; children referenced by index. Leaves have
// feature == kLeaf.
struct TreeNode {
    static constexpr std::size_t kLeaf = static_cast<std::size_t>(-1);

    std::size_t feature = kLeaf;
    double threshold = 0.0;
    double value = 0.0;     // leaf prediction (mean of targets reaching it)
    double decrease = 0.0;  // impurity decrease, internal nodes only
    std::size_t n_samples = 0;
    std::size_t left = 0;
    std::size_t right = 0;

    bool is_leaf() const noexcept { return feature == kLeaf; }
};

struct RegressionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    int max_depth = 0;
};

struct TrainConfig {
    int n_stages = 500;
    double learning_rate = 0.01;
    int max_depth = 4;
    int min_samples_leaf = 1;
    double subsample = 1.0;  // row-subsampling fraction; 1.0 = deterministic full fit
    std::uint64_t seed = 0;

    void validate() const;  // throws Error
};

struct BoostedEnsemble {
    double f0 = 0.0;
    std::vector<RegressionTree> trees;
    double learning_rate = 0.0;
    std::vector<std::string> feature_names;
};

struct LossCurve {
    std::vector<double> train_mse;  // index m-1 holds the MSE of F_m
    std::vector<double> test_mse;

    std::string to_csv() const;  // stage,train_mse,test_mse
};

double mse(const std::vector<double>& y, const std::vector<double>& y_hat);

// Exhaustive search over features and midpoint thresholds for the split of
// the given sample index set that maximizes SSE decrease. Ties go to the
// lower feature index, then the smaller threshold.
std::optional<SplitCandidate> best_split(const std::vector<std::vector<double>>& x,
                                         const std::vector<double>& y,
                                         const std::vector<std::size_t>& samples,
                                         int min_samples_leaf);

RegressionTree fit_tree(const std::vector<std::vector<double>>& x,
                        const std::vector<double>& y,
                        const TrainConfig& config);

double predict_tree(const RegressionTree& tree, const std::vector<double>& row);

BoostedEnsemble fit_ensemble(const RegressionProblem& train, const TrainConfig& config);

std::vector<double> predict_ensemble(const BoostedEnsemble& ensemble,
                                     const std::vector<std::vector<double>>& x);

// Train/test MSE of every prefix F_1 .. F_M in one pass over the trees.
LossCurve staged_deviance(const BoostedEnsemble& ensemble,
                          const RegressionProblem& train,
                          const RegressionProblem& test);

// Inspection format: f0, learning rate, feature names, nested node records.
// Documented in the repo docs; not stable across versions.
std::string ensemble_to_json(const BoostedEnsemble& ensemble);
BoostedEnsemble ensemble_from_json(const std::string& text);

}  // namespace engrank
