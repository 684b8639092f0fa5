#include "engrank/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "engrank/csv.hpp"
#include "engrank/errors.hpp"
#include "engrank/rng.hpp"
#include "engrank/version.hpp"

namespace engrank {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Rethrows stage failures with the stage name attached, keeping the error
// type (the CLI maps types to exit codes).
template <typename F>
auto with_stage(const std::string& stage, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const ConsistencyError&) {
        throw;
    } catch (const DataError& e) {
        throw DataError(stage + ": " + e.what());
    } catch (const Error& e) {
        throw Error(stage + ": " + e.what());
    } catch (const std::exception& e) {
        throw Error(stage + ": " + e.what());
    }
}

std::string policy_to_string(const TierPolicy& policy) {
    switch (policy.preset) {
        case TierPreset::be_style: return "be_style";
        case TierPreset::ce_ee_style: return "ce_ee_style";
        case TierPreset::custom: return "custom";
    }
    throw Error("tier policy: bad enum value");
}

json policy_to_json(const TierPolicy& policy) {
    if (policy.preset != TierPreset::custom) return policy_to_string(policy);
    json j;
    j["rank_thresholds"] = policy.custom.rank_thresholds;
    j["scales"] = policy.custom.scales;
    return j;
}

TierPolicy policy_from_json(const json& j, const std::string& key) {
    if (j.is_string()) {
        const auto name = j.get<std::string>();
        if (name == "be_style") return TierPolicy{TierPreset::be_style, {}};
        if (name == "ce_ee_style") return TierPolicy{TierPreset::ce_ee_style, {}};
        throw DataError("config: unknown ahp preset '" + name + "' for " + key);
    }
    if (j.is_object()) {
        TierPolicy policy{TierPreset::custom, {}};
        policy.custom.rank_thresholds = j.at("rank_thresholds").get<std::vector<double>>();
        policy.custom.scales = j.at("scales").get<std::vector<std::vector<int>>>();
        return policy;
    }
    throw DataError("config: ahp entry for " + key + " must be a preset name or an object");
}

json importance_to_json(const ImportanceVector& v) {
    json j;
    j["features"] = v.features;
    j["scores"] = v.scores;
    if (v.method == ImportanceMethod::mdi) j["all_zero"] = v.all_zero;
    return j;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw DataError("write failed: " + path.string());
}

std::string lower_name(EngagementTarget t) {
    std::string name(target_name(t));
    std::transform(name.begin(), name.end(), name.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return name;
}

}  // namespace

const TierPolicy& PipelineConfig::policy_for(EngagementTarget t) const {
    switch (t) {
        case EngagementTarget::be: return be_policy;
        case EngagementTarget::ce: return ce_policy;
        case EngagementTarget::ee: return ee_policy;
    }
    throw Error("policy_for: bad enum value");
}

void PipelineConfig::validate() const {
    if (input_path.empty() == !synth.has_value()) {
        throw DataError("config: exactly one of input path and synth spec must be set");
    }
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw DataError("config: train_fraction must lie in (0, 1)");
    }
    if (synth) synth->validate();
    train.validate();
    permutation.validate();
}

std::uint64_t synth_seed(std::uint64_t master) { return derive_seed(master, "synth"); }

std::uint64_t split_seed(std::uint64_t master) { return derive_seed(master, "split"); }

std::uint64_t train_seed(std::uint64_t master, EngagementTarget t) {
    return derive_seed(master, "train:" + std::string(target_name(t)));
}

std::uint64_t perm_seed(std::uint64_t master, EngagementTarget t) {
    return derive_seed(master, "perm:" + std::string(target_name(t)));
}

bool PipelineReport::all_consistent() const {
    return targets[0].ahp.consistent && targets[1].ahp.consistent &&
           targets[2].ahp.consistent;
}

PipelineConfig config_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("config: ") + e.what());
    }
    if (!doc.is_object()) throw DataError("config: document must be a JSON object");

    static const std::set<std::string> known = {
        "input", "synth", "train_fraction", "train", "permutation", "ahp", "seed"};
    for (const auto& [key, value] : doc.items()) {
        if (!known.count(key)) throw DataError("config: unknown key '" + key + "'");
    }

    try {
        PipelineConfig cfg;
        if (doc.contains("input")) cfg.input_path = doc["input"].get<std::string>();
        if (doc.contains("synth")) {
            const json& s = doc["synth"];
            SynthSpec spec;
            if (s.contains("n_rows")) spec.n_rows = s["n_rows"].get<std::size_t>();
            if (s.contains("bl_probability")) {
                spec.bl_probability = s["bl_probability"].get<double>();
            }
            if (s.contains("bl_effect")) spec.bl_effect = s["bl_effect"].get<double>();
            if (s.contains("noise_scale")) spec.noise_scale = s["noise_scale"].get<double>();
            if (s.contains("gender_probability")) {
                spec.gender_probability = s["gender_probability"].get<double>();
            }
            if (s.contains("age_band_weights")) {
                const auto w = s["age_band_weights"].get<std::vector<double>>();
                if (w.size() != spec.age_band_weights.size()) {
                    throw DataError("config: age_band_weights needs 4 entries");
                }
                std::copy(w.begin(), w.end(), spec.age_band_weights.begin());
            }
            if (s.contains("measures")) {
                const json& ms = s["measures"];
                if (ms.size() != spec.measures.size()) {
                    throw DataError("config: measures needs 7 entries");
                }
                for (std::size_t i = 0; i < spec.measures.size(); ++i) {
                    spec.measures[i].base = ms[i].at("base").get<double>();
                    spec.measures[i].dispersion = ms[i].at("dispersion").get<double>();
                }
            }
            cfg.synth = spec;
        }
        if (doc.contains("train_fraction")) {
            cfg.train_fraction = doc["train_fraction"].get<double>();
        }
        if (doc.contains("train")) {
            const json& t = doc["train"];
            if (t.contains("n_stages")) cfg.train.n_stages = t["n_stages"].get<int>();
            if (t.contains("learning_rate")) {
                cfg.train.learning_rate = t["learning_rate"].get<double>();
            }
            if (t.contains("max_depth")) cfg.train.max_depth = t["max_depth"].get<int>();
            if (t.contains("min_samples_leaf")) {
                cfg.train.min_samples_leaf = t["min_samples_leaf"].get<int>();
            }
            if (t.contains("subsample")) cfg.train.subsample = t["subsample"].get<double>();
        }
        if (doc.contains("permutation")) {
            const json& p = doc["permutation"];
            if (p.contains("repetitions")) {
                cfg.permutation.repetitions = p["repetitions"].get<int>();
            }
            if (p.contains("scorer")) {
                const auto scorer = p["scorer"].get<std::string>();
                if (scorer == "r2") {
                    cfg.permutation.scorer = Scorer::r2;
                } else if (scorer == "neg_mse") {
                    cfg.permutation.scorer = Scorer::neg_mse;
                } else {
                    throw DataError("config: unknown scorer '" + scorer + "'");
                }
            }
        }
        if (doc.contains("ahp")) {
            const json& a = doc["ahp"];
            if (a.contains("be")) cfg.be_policy = policy_from_json(a["be"], "be");
            if (a.contains("ce")) cfg.ce_policy = policy_from_json(a["ce"], "ce");
            if (a.contains("ee")) cfg.ee_policy = policy_from_json(a["ee"], "ee");
        }
        if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
        return cfg;
    } catch (const json::exception& e) {
        throw DataError(std::string("config: ") + e.what());
    }
}

std::string config_to_json(const PipelineConfig& config) {
    json doc;
    if (config.synth) {
        const SynthSpec& s = *config.synth;
        json& j = doc["synth"];
        j["n_rows"] = s.n_rows;
        j["bl_probability"] = s.bl_probability;
        j["bl_effect"] = s.bl_effect;
        j["noise_scale"] = s.noise_scale;
        j["gender_probability"] = s.gender_probability;
        j["age_band_weights"] = s.age_band_weights;
        j["measures"] = json::array();
        for (const auto& m : s.measures) {
            j["measures"].push_back({{"base", m.base}, {"dispersion", m.dispersion}});
        }
    } else {
        doc["input"] = config.input_path;
    }
    doc["train_fraction"] = config.train_fraction;
    doc["train"] = {{"n_stages", config.train.n_stages},
                    {"learning_rate", config.train.learning_rate},
                    {"max_depth", config.train.max_depth},
                    {"min_samples_leaf", config.train.min_samples_leaf},
                    {"subsample", config.train.subsample}};
    doc["permutation"] = {
        {"repetitions", config.permutation.repetitions},
        {"scorer", config.permutation.scorer == Scorer::r2 ? "r2" : "neg_mse"}};
    doc["ahp"] = {{"be", policy_to_json(config.be_policy)},
                  {"ce", policy_to_json(config.ce_policy)},
                  {"ee", policy_to_json(config.ee_policy)}};
    doc["seed"] = config.seed;
    return doc.dump(2);
}

Ranking parse_ranking_csv(std::istream& in) {
    const CsvDocument doc = read_csv(in);
    const std::vector<std::string> expected = {"feature",   "mdi",      "permutation",
                                               "mdi_rank",  "perm_rank", "avg_rank",
                                               "disagreement_flag"};
    if (doc.header != expected) {
        throw DataError("ranking csv: header must be "
                        "feature,mdi,permutation,mdi_rank,perm_rank,avg_rank,"
                        "disagreement_flag");
    }

    auto number = [](const std::string& cell, std::size_t row, const char* what) {
        double v = 0.0;
        const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
            throw DataError("ranking csv: row " + std::to_string(row) + ": bad " +
                            std::string(what) + " '" + cell + "'");
        }
        return v;
    };

    Ranking ranking;
    for (std::size_t i = 0; i < doc.rows.size(); ++i) {
        const auto& cells = doc.rows[i];
        const std::size_t row = i + 1;
        if (cells.size() != expected.size()) {
            throw DataError("ranking csv: row " + std::to_string(row) + ": expected " +
                            std::to_string(expected.size()) + " cells");
        }
        RankedFeature f;
        f.feature = cells[0];
        f.mdi_score = number(cells[1], row, "mdi");
        f.perm_score = number(cells[2], row, "permutation");
        f.mdi_rank = static_cast<int>(number(cells[3], row, "mdi_rank"));
        f.perm_rank = static_cast<int>(number(cells[4], row, "perm_rank"));
        f.avg_rank = number(cells[5], row, "avg_rank");
        f.disagreement = number(cells[6], row, "disagreement_flag") != 0.0;
        ranking.features.push_back(std::move(f));
    }
    if (ranking.features.empty()) throw DataError("ranking csv: no data rows");
    return ranking;
}

int pipeline_thread_cap() {
    const char* raw = std::getenv("ENGAGE_RANK_THREADS");
    if (raw == nullptr) return 3;
    int value = 0;
    const auto res = std::from_chars(raw, raw + std::string_view(raw).size(), value);
    if (res.ec != std::errc()) return 3;
    return std::clamp(value, 1, 3);
}

PipelineReport run_pipeline(const PipelineConfig& config) {
    config.validate();

    const SurveyTable table = with_stage("load", [&] {
        if (config.synth) {
            SynthSpec spec = *config.synth;
            spec.seed = synth_seed(config.seed);
            return synthesize(spec);
        }
        std::ifstream in(config.input_path, std::ios::binary);
        if (!in) throw DataError("cannot open input file " + config.input_path);
        return compute_composites(parse_survey_csv(in));
    });

    PipelineReport report;
    report.stats = with_stage("stats", [&] { return descriptive_stats(table); });

    const auto [train, test] = with_stage("split", [&] {
        return split_table(table, config.train_fraction, split_seed(config.seed));
    });

    auto run_target = [&, &train = train, &test = test](EngagementTarget t) {
        const std::string name(target_name(t));
        TargetReport out;
        out.target = t;

        const auto [ensemble, view_test] = with_stage("train:" + name, [&] {
            const RegressionProblem view_train = make_target_view(train, t);
            RegressionProblem view_test_inner = make_target_view(test, t);
            TrainConfig tc = config.train;
            tc.seed = train_seed(config.seed, t);
            BoostedEnsemble fitted = fit_ensemble(view_train, tc);
            out.deviance = staged_deviance(fitted, view_train, view_test_inner);
            return std::make_pair(std::move(fitted), std::move(view_test_inner));
        });

        with_stage("importance:" + name, [&] {
            out.mdi = mdi(ensemble);
            PermutationConfig pc = config.permutation;
            pc.seed = perm_seed(config.seed, t);
            out.permutation =
                permutation_importance(ensemble, view_test.x, view_test.y, pc);
            out.ranking = combined_ranking(out.mdi, out.permutation);
        });

        with_stage("ahp:" + name, [&] {
            const TierPolicy& policy = config.policy_for(t);
            const TierAssignment tiers = assign_tiers(drop_composites(out.ranking), policy);
            out.pairwise = build_pairwise(tiers);
            out.ahp = evaluate_unchecked(out.ranking, policy);
        });
        return out;
    };

    // Targets run in batches of at most pipeline_thread_cap() workers; the
    // report is always assembled in BE, CE, EE order, so the cap never
    // changes output bytes.
    const std::array<EngagementTarget, 3> order = {
        EngagementTarget::be, EngagementTarget::ce, EngagementTarget::ee};
    const auto cap = static_cast<std::size_t>(pipeline_thread_cap());
    std::size_t at = 0;
    while (at < order.size()) {
        const std::size_t batch = std::min(cap, order.size() - at);
        std::vector<std::future<TargetReport>> futures;
        futures.reserve(batch);
        for (std::size_t k = 0; k < batch; ++k) {
            const EngagementTarget t = order[at + k];
            futures.push_back(std::async(std::launch::async, run_target, t));
        }
        for (std::size_t k = 0; k < batch; ++k) {
            report.targets[at + k] = futures[k].get();
        }
        at += batch;
    }

    report.provenance.seed = config.seed;
    report.provenance.config_json = config_to_json(config);
    report.provenance.tool_version = kVersion;
    return report;
}

std::string report_to_json(const PipelineReport& report) {
    json doc;
    doc["tool"] = {{"name", kToolName}, {"version", report.provenance.tool_version}};
    doc["provenance"] = {{"seed", report.provenance.seed},
                         {"config", json::parse(report.provenance.config_json)}};

    doc["stats"] = json::array();
    for (const auto& c : report.stats.columns) {
        json col;
        col["column"] = c.column;
        col["mean"] = c.mean;
        col["std"] = c.std_dev;
        col["skewness"] = c.skewness ? json(*c.skewness) : json(nullptr);
        col["kurtosis"] = c.excess_kurtosis ? json(*c.excess_kurtosis) : json(nullptr);
        doc["stats"].push_back(std::move(col));
    }

    for (const auto& t : report.targets) {
        json target;
        target["deviance"] = {{"train_mse", t.deviance.train_mse},
                              {"test_mse", t.deviance.test_mse}};
        target["mdi"] = importance_to_json(t.mdi);
        target["permutation"] = importance_to_json(t.permutation);
        target["ranking"] = json::array();
        for (const auto& f : t.ranking.features) {
            target["ranking"].push_back({{"feature", f.feature},
                                         {"mdi", f.mdi_score},
                                         {"permutation", f.perm_score},
                                         {"mdi_rank", f.mdi_rank},
                                         {"perm_rank", f.perm_rank},
                                         {"avg_rank", f.avg_rank},
                                         {"disagreement", f.disagreement}});
        }
        target["pairwise"] = {{"labels", t.pairwise.labels}, {"matrix", t.pairwise.a}};
        target["ahp"] = {{"features", t.ahp.features},
                         {"weight_scores", t.ahp.weight_scores},
                         {"percentages", t.ahp.percentages},
                         {"lambda_max", t.ahp.lambda_max},
                         {"ci", t.ahp.ci},
                         {"cr", t.ahp.cr},
                         {"consistent", t.ahp.consistent}};
        doc["targets"][std::string(target_name(t.target))] = std::move(target);
    }
    return doc.dump(2) + "\n";
}

std::string evaluation_matrix_csv(const PipelineReport& report) {
    // Wide layout: union of per-target criteria, targets as row pairs.
    static const std::vector<std::string> kColumns = {
        "BL",    "B-Act", "B-Int", "B-Gro",  "C-Mgt",
        "C-Com", "E-Int", "E-Sat", "Gender", "Age"};

    std::vector<std::string> header = {"target", "row"};
    header.insert(header.end(), kColumns.begin(), kColumns.end());
    std::string out = join_csv_row(header);

    for (const auto& t : report.targets) {
        auto value_cell = [&](const std::string& feature, const std::vector<double>& values) {
            for (std::size_t i = 0; i < t.ahp.features.size(); ++i) {
                if (t.ahp.features[i] == feature) return format_double(values[i]);
            }
            return std::string();  // excluded from this target's matrix
        };
        std::vector<std::string> weight_row = {std::string(target_name(t.target)),
                                               "weight_score"};
        std::vector<std::string> pct_row = {std::string(target_name(t.target)),
                                            "percentage"};
        for (const auto& column : kColumns) {
            weight_row.push_back(value_cell(column, t.ahp.weight_scores));
            pct_row.push_back(value_cell(column, t.ahp.percentages));
        }
        out += join_csv_row(weight_row);
        out += join_csv_row(pct_row);
    }
    return out;
}

void emit_report(const PipelineReport& report, const std::string& out_dir) {
    for (const auto& t : report.targets) {
        if (t.deviance.train_mse.empty() || t.ahp.features.empty()) {
            throw Error("emit_report: incomplete target " +
                        std::string(target_name(t.target)));
        }
    }

    const fs::path dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create output directory " + dir.string());

    std::vector<std::pair<std::string, std::string>> files;
    files.emplace_back("report.json", report_to_json(report));
    files.emplace_back("stats.csv", report.stats.to_csv());
    for (const auto& t : report.targets) {
        const std::string suffix = lower_name(t.target);
        files.emplace_back("deviance_" + suffix + ".csv", t.deviance.to_csv());
        files.emplace_back("importance_" + suffix + ".csv", t.ranking.to_csv());
        files.emplace_back("pairwise_" + suffix + ".csv", t.pairwise.to_csv());
    }
    files.emplace_back("evaluation_matrix.csv", evaluation_matrix_csv(report));

    // stage everything first, then rename: a failed run leaves no partial set
    std::vector<std::pair<fs::path, fs::path>> staged;
    try {
        for (const auto& [name, content] : files) {
            const fs::path tmp = dir / (".tmp-" + name);
            write_file(tmp, content);
            staged.emplace_back(tmp, dir / name);
        }
        for (const auto& [tmp, final_path] : staged) {
            fs::rename(tmp, final_path);
        }
    } catch (...) {
        for (const auto& [tmp, final_path] : staged) {
            fs::remove(tmp, ec);
        }
        throw;
    }
}

}  // namespace engrank
