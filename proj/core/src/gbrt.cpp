#include "engrank/gbrt.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "engrank/csv.hpp"
#include "engrank/errors.hpp"
#include "engrank/rng.hpp"

namespace engrank {

namespace {

double mean_of(const std::vector<double>& y, const std::vector<std::size_t>& samples) {
    double sum = 0.0;
    for (const std::size_t i : samples) sum += y[i];
    return sum / static_cast<double>(samples.size());
}

bool constant_targets(const std::vector<double>& y, const std::vector<std::size_t>& samples) {
    for (const std::size_t i : samples) {
        if (y[i] != y[samples.front()]) return false;
    }
    return true;
}

struct TreeBuilder {
    const std::vector<std::vector<double>>& x;
    const std::vector<double>& y;
    const TrainConfig& config;
    std::vector<TreeNode> nodes;

    std::size_t build(const std::vector<std::size_t>& samples, int depth) {
        const std::size_t index = nodes.size();
        nodes.emplace_back();
        nodes[index].n_samples = samples.size();
        nodes[index].value = mean_of(y, samples);

        if (depth >= config.max_depth || samples.size() < 2) return index;
        const auto split = best_split(x, y, samples, config.min_samples_leaf);
        if (!split) return index;

        std::vector<std::size_t> left, right;
        left.reserve(split->n_left);
        right.reserve(split->n_right);
        for (const std::size_t i : samples) {
            (x[i][split->feature] <= split->threshold ? left : right).push_back(i);
        }

        // children are appended after this node; fill indices afterwards so
        // no reference survives a reallocation
        const std::size_t left_index = build(left, depth + 1);
        const std::size_t right_index = build(right, depth + 1);
        nodes[index].feature = split->feature;
        nodes[index].threshold = split->threshold;
        nodes[index].decrease = split->decrease;
        nodes[index].left = left_index;
        nodes[index].right = right_index;
        return index;
    }
};

RegressionTree fit_tree_on(const std::vector<std::vector<double>>& x,
                           const std::vector<double>& y,
                           const std::vector<std::size_t>& samples,
                           const TrainConfig& config) {
    TreeBuilder builder{x, y, config, {}};
    builder.build(samples, 0);
    RegressionTree tree;
    tree.nodes = std::move(builder.nodes);
    tree.max_depth = config.max_depth;
    return tree;
}

}  // namespace

void TrainConfig::validate() const {
    if (n_stages < 1) throw Error("train config: n_stages must be >= 1");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
        throw Error("train config: learning_rate must lie in (0, 1]");
    }
    if (max_depth < 1) throw Error("train config: max_depth must be >= 1");
    if (min_samples_leaf < 1) throw Error("train config: min_samples_leaf must be >= 1");
    if (!(subsample > 0.0 && subsample <= 1.0)) {
        throw Error("train config: subsample must lie in (0, 1]");
    }
}

double mse(const std::vector<double>& y, const std::vector<double>& y_hat) {
    if (y.empty()) throw Error("mse: empty vectors");
    if (y.size() != y_hat.size()) throw Error("mse: length mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = y[i] - y_hat[i];
        sum += d * d;
    }
    return sum / static_cast<double>(y.size());
}

std::optional<SplitCandidate> best_split(const std::vector<std::vector<double>>& x,
                                         const std::vector<double>& y,
                                         const std::vector<std::size_t>& samples,
                                         int min_samples_leaf) {
    const std::size_t n = samples.size();
    if (n < 2) return std::nullopt;
    // exact-constant check keeps rounding noise from manufacturing a split
    if (constant_targets(y, samples)) return std::nullopt;

    const std::size_t n_features = x[samples.front()].size();
    const auto min_leaf = static_cast<std::size_t>(min_samples_leaf);

    std::optional<SplitCandidate> best;
    std::vector<std::pair<double, double>> column(n);  // (feature value, target)

    for (std::size_t f = 0; f < n_features; ++f) {
        for (std::size_t k = 0; k < n; ++k) {
            column[k] = {x[samples[k]][f], y[samples[k]]};
        }
        std::sort(column.begin(), column.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });

        double left_sum = 0.0;
        double total_sum = 0.0;
        for (const auto& [value, target] : column) total_sum += target;

        // thresholds sit at midpoints between consecutive distinct values;
        // scanning ascending with a strict improvement test realizes the
        // (lower feature, smaller threshold) tie-break
        for (std::size_t k = 0; k + 1 < n; ++k) {
            left_sum += column[k].second;
            if (column[k].first == column[k + 1].first) continue;
            const std::size_t n_left = k + 1;
            const std::size_t n_right = n - n_left;
            if (n_left < min_leaf || n_right < min_leaf) continue;

            const double mean_left = left_sum / static_cast<double>(n_left);
            const double mean_right = (total_sum - left_sum) / static_cast<double>(n_right);
            const double gap = mean_left - mean_right;
            // between-groups identity: parent SSE - child SSEs
            const double decrease = gap * gap * static_cast<double>(n_left) *
                                    static_cast<double>(n_right) / static_cast<double>(n);
            if (decrease <= 0.0) continue;
            if (!best || decrease > best->decrease) {
                best = SplitCandidate{f, (column[k].first + column[k + 1].first) / 2.0,
                                      decrease, n_left, n_right};
            }
        }
    }
    return best;
}

RegressionTree fit_tree(const std::vector<std::vector<double>>& x,
                        const std::vector<double>& y,
                        const TrainConfig& config) {
    if (y.empty()) throw Error("fit_tree: empty input");
    if (x.size() != y.size()) throw Error("fit_tree: row count mismatch");
    config.validate();
    std::vector<std::size_t> samples(y.size());
    std::iota(samples.begin(), samples.end(), std::size_t{0});
    return fit_tree_on(x, y, samples, config);
}

double predict_tree(const RegressionTree& tree, const std::vector<double>& row) {
    if (tree.nodes.empty()) throw Error("predict_tree: empty tree");
    std::size_t at = 0;
    while (!tree.nodes[at].is_leaf()) {
        const TreeNode& node = tree.nodes[at];
        if (node.feature >= row.size()) {
            throw DataError("predict_tree: row lacks feature index " +
                            std::to_string(node.feature));
        }
        at = row[node.feature] <= node.threshold ? node.left : node.right;
    }
    return tree.nodes[at].value;
}

BoostedEnsemble fit_ensemble(const RegressionProblem& train, const TrainConfig& config) {
    if (train.y.empty()) throw Error("fit_ensemble: empty training data");
    if (train.x.size() != train.y.size()) throw Error("fit_ensemble: row count mismatch");
    config.validate();

    const std::size_t n = train.y.size();
    BoostedEnsemble ensemble;
    ensemble.learning_rate = config.learning_rate;
    ensemble.feature_names = train.features;
    ensemble.f0 = std::accumulate(train.y.begin(), train.y.end(), 0.0) /
                  static_cast<double>(n);
    ensemble.trees.reserve(static_cast<std::size_t>(config.n_stages));

    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    Rng subsample_rng(derive_seed(config.seed, "subsample"));
    const auto n_sub = std::max<std::size_t>(
        1, static_cast<std::size_t>(
               std::llround(static_cast<double>(n) * config.subsample)));

    std::vector<double> current(n, ensemble.f0);
    std::vector<double> residuals(n);
    for (int m = 0; m < config.n_stages; ++m) {
        for (std::size_t i = 0; i < n; ++i) residuals[i] = train.y[i] - current[i];

        RegressionTree tree;
        if (config.subsample >= 1.0) {
            tree = fit_tree_on(train.x, residuals, all, config);
        } else {
            std::vector<std::size_t> pool = all;
            shuffle(pool, subsample_rng);
            std::vector<std::size_t> taken(pool.begin(), pool.begin() + n_sub);
            std::sort(taken.begin(), taken.end());
            tree = fit_tree_on(train.x, residuals, taken, config);
        }
        for (std::size_t i = 0; i < n; ++i) {
            current[i] += config.learning_rate * predict_tree(tree, train.x[i]);
        }
        ensemble.trees.push_back(std::move(tree));
    }
    return ensemble;
}

std::vector<double> predict_ensemble(const BoostedEnsemble& ensemble,
                                     const std::vector<std::vector<double>>& x) {
    std::vector<double> out(x.size(), ensemble.f0);
    for (const auto& tree : ensemble.trees) {
        for (std::size_t i = 0; i < x.size(); ++i) {
            out[i] += ensemble.learning_rate * predict_tree(tree, x[i]);
        }
    }
    return out;
}

LossCurve staged_deviance(const BoostedEnsemble& ensemble,
                          const RegressionProblem& train,
                          const RegressionProblem& test) {
    LossCurve curve;
    curve.train_mse.reserve(ensemble.trees.size());
    curve.test_mse.reserve(ensemble.trees.size());

    std::vector<double> train_pred(train.y.size(), ensemble.f0);
    std::vector<double> test_pred(test.y.size(), ensemble.f0);
    for (const auto& tree : ensemble.trees) {
        for (std::size_t i = 0; i < train.y.size(); ++i) {
            train_pred[i] += ensemble.learning_rate * predict_tree(tree, train.x[i]);
        }
        for (std::size_t i = 0; i < test.y.size(); ++i) {
            test_pred[i] += ensemble.learning_rate * predict_tree(tree, test.x[i]);
        }
        curve.train_mse.push_back(mse(train.y, train_pred));
        curve.test_mse.push_back(mse(test.y, test_pred));
    }
    return curve;
}

std::string LossCurve::to_csv() const {
    std::string out = "stage,train_mse,test_mse\n";
    for (std::size_t m = 0; m < train_mse.size(); ++m) {
        out += join_csv_row({std::to_string(m + 1), format_double(train_mse[m]),
                             format_double(test_mse[m])});
    }
    return out;
}

std::string ensemble_to_json(const BoostedEnsemble& ensemble) {
    nlohmann::json doc;
    doc["f0"] = ensemble.f0;
    doc["learning_rate"] = ensemble.learning_rate;
    doc["feature_names"] = ensemble.feature_names;
    doc["trees"] = nlohmann::json::array();
    for (const auto& tree : ensemble.trees) {
        nlohmann::json t;
        t["max_depth"] = tree.max_depth;
        t["nodes"] = nlohmann::json::array();
        for (const auto& node : tree.nodes) {
            nlohmann::json n;
            n["feature"] = node.is_leaf() ? -1 : static_cast<long long>(node.feature);
            n["threshold"] = node.threshold;
            n["value"] = node.value;
            n["decrease"] = node.decrease;
            n["n_samples"] = node.n_samples;
            n["left"] = node.left;
            n["right"] = node.right;
            t["nodes"].push_back(std::move(n));
        }
        doc["trees"].push_back(std::move(t));
    }
    return doc.dump(2);
}

BoostedEnsemble ensemble_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("ensemble json: ") + e.what());
    }
    try {
        BoostedEnsemble ensemble;
        ensemble.f0 = doc.at("f0").get<double>();
        ensemble.learning_rate = doc.at("learning_rate").get<double>();
        ensemble.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
        for (const auto& t : doc.at("trees")) {
            RegressionTree tree;
            tree.max_depth = t.at("max_depth").get<int>();
            for (const auto& n : t.at("nodes")) {
                TreeNode node;
                const auto feature = n.at("feature").get<long long>();
                node.feature = feature < 0 ? TreeNode::kLeaf
                                           : static_cast<std::size_t>(feature);
                node.threshold = n.at("threshold").get<double>();
                node.value = n.at("value").get<double>();
                node.decrease = n.at("decrease").get<double>();
                node.n_samples = n.at("n_samples").get<std::size_t>();
                node.left = n.at("left").get<std::size_t>();
                node.right = n.at("right").get<std::size_t>();
                tree.nodes.push_back(node);
            }
            ensemble.trees.push_back(std::move(tree));
        }
        return ensemble;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("ensemble json: ") + e.what());
    }
}

}  // namespace engrank
