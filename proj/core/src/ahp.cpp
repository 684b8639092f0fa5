#include "engrank/ahp.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "engrank/csv.hpp"
#include "engrank/errors.hpp"

namespace engrank {

namespace {

bool is_composite(std::string_view feature) {
    return feature == "BE" || feature == "CE" || feature == "EE";
}

std::vector<std::vector<int>> be_style_scales() { return {{7, 9}, {3}}; }

std::vector<std::vector<int>> ce_ee_style_scales() { return {{7, 8, 9}, {2, 3}, {3}}; }

}  // namespace

std::string_view saaty_label(int intensity) {
    if (intensity < 1 || intensity > 9) {
        throw Error("saaty_label: intensity " + std::to_string(intensity) +
                    " outside 1..9");
    }
    return kSaatyLabels[static_cast<std::size_t>(intensity)];
}

int TierAssignment::scale(std::size_t i, std::size_t j) const {
    if (i >= j || j >= tiers.size()) throw Error("tier scale: bad tier pair");
    return scales[i][j - i - 1];
}

void TierAssignment::validate() const {
    if (tiers.empty()) throw Error("tiers: empty assignment");
    if (tiers.front().empty() || tiers.back().empty()) {
        throw Error("tiers: first and last tiers must be non-empty");
    }
    std::set<std::string> seen;
    for (const auto& tier : tiers) {
        for (const auto& f : tier) {
            if (!seen.insert(f).second) throw Error("tiers: duplicate feature " + f);
        }
    }

    if (scales.size() + 1 != tiers.size()) throw Error("tiers: scale table shape mismatch");
    for (std::size_t i = 0; i + 1 < tiers.size(); ++i) {
        if (scales[i].size() != tiers.size() - i - 1) {
            throw Error("tiers: scale table shape mismatch");
        }
        for (std::size_t k = 0; k < scales[i].size(); ++k) {
            const int s = scales[i][k];
            if (s < 2 || s > 9) {
                throw Error("tiers: scale " + std::to_string(s) + " outside 2..9");
            }
            // farther tiers must not compare weaker
            if (k > 0 && scales[i][k] < scales[i][k - 1]) {
                throw Error("tiers: scale row " + std::to_string(i) + " not monotone");
            }
        }
    }
}

Ranking drop_composites(const Ranking& ranking) {
    Ranking out;
    for (const auto& f : ranking.features) {
        if (!is_composite(f.feature)) out.features.push_back(f);
    }
    return out;
}

TierAssignment assign_tiers(const Ranking& ranking, const TierPolicy& policy) {
    const std::size_t n = ranking.features.size();
    if (n == 0) throw Error("assign_tiers: empty ranking");

    auto name = [&](std::size_t i) { return ranking.features[i].feature; };

    TierAssignment out;
    switch (policy.preset) {
        case TierPreset::be_style: {
            // top-1 | middle block (may be empty) | bottom-1
            if (n < 2) throw Error("assign_tiers: be_style needs at least 2 features");
            out.tiers.resize(3);
            out.tiers[0].push_back(name(0));
            for (std::size_t i = 1; i + 1 < n; ++i) out.tiers[1].push_back(name(i));
            out.tiers[2].push_back(name(n - 1));
            out.scales = be_style_scales();
            break;
        }
        case TierPreset::ce_ee_style: {
            // top-1 | middle block (may be empty) | second-from-bottom-1 | bottom-1.
            // The two bottom tiers are anchored to Age and Gender whenever the
            // ranking carries both demographics; otherwise they fall back to
            // the two lowest-ranked features.
            if (n < 3) throw Error("assign_tiers: ce_ee_style needs at least 3 features");
            out.tiers.resize(4);
            bool has_gender = false;
            bool has_age = false;
            for (std::size_t i = 0; i < n; ++i) {
                has_gender = has_gender || name(i) == "Gender";
                has_age = has_age || name(i) == "Age";
            }
            if (has_gender && has_age) {
                for (std::size_t i = 0; i < n; ++i) {
                    if (name(i) == "Gender" || name(i) == "Age") continue;
                    (out.tiers[0].empty() ? out.tiers[0] : out.tiers[1]).push_back(name(i));
                }
                out.tiers[2].push_back("Age");
                out.tiers[3].push_back("Gender");
            } else {
                out.tiers[0].push_back(name(0));
                for (std::size_t i = 1; i + 2 < n; ++i) out.tiers[1].push_back(name(i));
                out.tiers[2].push_back(name(n - 2));
                out.tiers[3].push_back(name(n - 1));
            }
            out.scales = ce_ee_style_scales();
            break;
        }
        case TierPreset::custom: {
            const auto& thresholds = policy.custom.rank_thresholds;
            for (std::size_t t = 1; t < thresholds.size(); ++t) {
                if (!(thresholds[t] > thresholds[t - 1])) {
                    throw Error("assign_tiers: custom thresholds must ascend");
                }
            }
            out.tiers.resize(thresholds.size() + 1);
            for (std::size_t i = 0; i < n; ++i) {
                std::size_t tier = thresholds.size();
                for (std::size_t t = 0; t < thresholds.size(); ++t) {
                    if (ranking.features[i].avg_rank <= thresholds[t]) {
                        tier = t;
                        break;
                    }
                }
                out.tiers[tier].push_back(name(i));
            }
            out.scales = policy.custom.scales;
            break;
        }
    }
    out.validate();
    return out;
}

TierAssignment assign_tiers(const Ranking& ranking, TierPreset preset) {
    return assign_tiers(ranking, TierPolicy{preset, {}});
}

PairwiseMatrix build_pairwise(const TierAssignment& tiers) {
    tiers.validate();

    PairwiseMatrix m;
    std::vector<std::size_t> tier_of;
    for (std::size_t t = 0; t < tiers.tiers.size(); ++t) {
        for (const auto& f : tiers.tiers[t]) {
            m.labels.push_back(f);
            tier_of.push_back(t);
        }
    }

    const std::size_t n = m.labels.size();
    m.a.assign(n, std::vector<double>(n, 1.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (tier_of[i] < tier_of[j]) {
                m.a[i][j] = static_cast<double>(tiers.scale(tier_of[i], tier_of[j]));
            } else if (tier_of[i] > tier_of[j]) {
                m.a[i][j] = 1.0 / static_cast<double>(tiers.scale(tier_of[j], tier_of[i]));
            }
        }
    }
    return m;
}

void PairwiseMatrix::validate() const {
    const std::size_t n = labels.size();
    if (n == 0) throw Error("pairwise: empty matrix");
    if (a.size() != n) throw Error("pairwise: row count does not match labels");
    for (const auto& row : a) {
        if (row.size() != n) throw Error("pairwise: matrix is not square");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(a[i][i] - 1.0) > 1e-12) throw Error("pairwise: diagonal entry != 1");
        for (std::size_t j = 0; j < n; ++j) {
            if (!(a[i][j] > 0.0)) throw Error("pairwise: non-positive entry");
            if (std::abs(a[i][j] * a[j][i] - 1.0) > 1e-12) {
                throw Error("pairwise: reciprocity violated at (" + std::to_string(i) +
                            ", " + std::to_string(j) + ")");
            }
        }
    }
}

std::string PairwiseMatrix::to_csv() const {
    std::vector<std::string> header = {"feature"};
    header.insert(header.end(), labels.begin(), labels.end());
    std::string out = join_csv_row(header);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        std::vector<std::string> cells = {labels[i]};
        for (const double v : a[i]) cells.push_back(format_double(v));
        out += join_csv_row(cells);
    }
    return out;
}

std::vector<double> geometric_mean_weights(const PairwiseMatrix& a) {
    a.validate();
    const std::size_t n = a.size();
    std::vector<double> weights(n);
    for (std::size_t i = 0; i < n; ++i) {
        double log_sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) log_sum += std::log(a.a[i][j]);
        weights[i] = std::exp(log_sum / static_cast<double>(n));
    }
    return weights;
}

std::vector<double> normalize_weights(const std::vector<double>& weights) {
    double total = 0.0;
    for (const double w : weights) {
        if (!(w > 0.0)) throw Error("normalize_weights: non-positive weight");
        total += w;
    }
    std::vector<double> out(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) out[i] = 100.0 * weights[i] / total;
    return out;
}

double lambda_max(const PairwiseMatrix& a, const std::vector<double>& weights) {
    const std::size_t n = a.size();
    if (weights.size() != n) throw Error("lambda_max: dimension mismatch");
    double total = 0.0;
    for (const double w : weights) {
        if (!(w > 0.0)) throw Error("lambda_max: non-positive weight");
        total += w;
    }

    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += a.a[i][j] * (weights[j] / total);
        sum += row / (weights[i] / total);
    }
    return sum / static_cast<double>(n);
}

double consistency_index(double lambda, std::size_t n) {
    if (n < 2) throw Error("consistency_index: needs n >= 2");
    return (lambda - static_cast<double>(n)) / static_cast<double>(n - 1);
}

double random_index(std::size_t n) {
    // Saaty's random indices; beyond n = 10 the table is not carried here
    static constexpr double kRi[] = {0.0, 0.0, 0.0, 0.58, 0.90, 1.12,
                                     1.24, 1.32, 1.41, 1.45, 1.49};
    if (n > 10) {
        throw Error("random_index: no random index tabulated for n = " + std::to_string(n));
    }
    return kRi[n];
}

double consistency_ratio(double ci, std::size_t n) {
    if (n <= 2) return 0.0;  // matrices this small are always consistent
    return ci / random_index(n);
}

AhpResult evaluate_unchecked(const Ranking& ranking, const TierPolicy& policy) {
    const Ranking criteria = drop_composites(ranking);
    if (criteria.features.empty()) {
        throw Error("ahp: ranking holds only composite features");
    }

    const TierAssignment tiers = assign_tiers(criteria, policy);
    const PairwiseMatrix matrix = build_pairwise(tiers);

    AhpResult result;
    result.features = matrix.labels;
    result.weight_scores = geometric_mean_weights(matrix);
    result.percentages = normalize_weights(result.weight_scores);
    result.lambda_max = lambda_max(matrix, result.weight_scores);
    const std::size_t n = matrix.size();
    result.ci = n >= 2 ? consistency_index(result.lambda_max, n) : 0.0;
    result.cr = consistency_ratio(result.ci, n);
    result.consistent = result.cr < 0.1;
    return result;
}

AhpResult evaluate(const Ranking& ranking, const TierPolicy& policy) {
    AhpResult result = evaluate_unchecked(ranking, policy);
    if (!result.consistent) {
        std::ostringstream msg;
        msg << "ahp: comparison matrix rejected, CR = " << result.cr << " >= 0.1";
        throw ConsistencyError(msg.str(), result.cr);
    }
    return result;
}

}  // namespace engrank
