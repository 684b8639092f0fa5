#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "engrank/ahp.hpp"
#include "engrank/errors.hpp"
#include "engrank/gbrt.hpp"
#include "engrank/importance.hpp"
#include "engrank/pipeline.hpp"
#include "engrank/survey.hpp"
#include "engrank/version.hpp"

namespace {

using namespace engrank;

struct CliOptions {
    std::string config_path;
    std::string input_path;
    std::string out_dir;
    std::string target = "be";
    std::uint64_t seed = 0;
    bool seed_given = false;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

PipelineConfig load_config(const CliOptions& opt) {
    PipelineConfig cfg;
    if (!opt.config_path.empty()) cfg = config_from_json(slurp(opt.config_path));
    if (!opt.input_path.empty()) {
        cfg.input_path = opt.input_path;
        cfg.synth.reset();
    }
    if (opt.seed_given) cfg.seed = opt.seed;
    // no source at all: fall back to the default synthetic table
    if (cfg.input_path.empty() && !cfg.synth) cfg.synth = SynthSpec{};
    return cfg;
}

SurveyTable load_table(const PipelineConfig& cfg) {
    if (cfg.synth) {
        SynthSpec spec = *cfg.synth;
        spec.seed = synth_seed(cfg.seed);
        return synthesize(spec);
    }
    std::ifstream in(cfg.input_path, std::ios::binary);
    if (!in) throw DataError("cannot open input file " + cfg.input_path);
    return compute_composites(parse_survey_csv(in));
}

EngagementTarget parse_target(const std::string& name) {
    const auto target = target_from_string(name);
    if (!target) throw DataError("unknown target '" + name + "'");
    return *target;
}

void write_or_print(const std::string& out_dir, const std::string& filename,
                    const std::string& content) {
    if (out_dir.empty()) {
        std::cout << content;
        return;
    }
    std::filesystem::create_directories(out_dir);
    const auto path = std::filesystem::path(out_dir) / filename;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open " + path.string() + " for writing");
    out << content;
    if (!out.flush()) throw DataError("write failed: " + path.string());
    std::cout << "wrote " << path.string() << "\n";
}

int cmd_stats(const CliOptions& opt) {
    const PipelineConfig cfg = load_config(opt);
    cfg.validate();
    const StatsTable stats = descriptive_stats(load_table(cfg));
    write_or_print(opt.out_dir, "stats.csv", stats.to_csv());
    return 0;
}

int cmd_synth(const CliOptions& opt) {
    const PipelineConfig cfg = load_config(opt);
    SynthSpec spec = cfg.synth ? *cfg.synth : SynthSpec{};
    spec.seed = synth_seed(cfg.seed);
    write_or_print(opt.out_dir, "synthetic.csv", to_csv(synthesize(spec)));
    return 0;
}

// shared by train and importance: fit one target's model on the pipeline's
// labeled sub-seeds so standalone runs reproduce in-report artifacts
struct FittedTarget {
    EngagementTarget target;
    BoostedEnsemble ensemble;
    RegressionProblem view_train;
    RegressionProblem view_test;
    LossCurve deviance;
};

FittedTarget fit_target(const PipelineConfig& cfg, EngagementTarget target) {
    const SurveyTable table = load_table(cfg);
    const auto [train, test] = split_table(table, cfg.train_fraction, split_seed(cfg.seed));

    FittedTarget out;
    out.target = target;
    out.view_train = make_target_view(train, target);
    out.view_test = make_target_view(test, target);
    TrainConfig tc = cfg.train;
    tc.seed = train_seed(cfg.seed, target);
    out.ensemble = fit_ensemble(out.view_train, tc);
    out.deviance = staged_deviance(out.ensemble, out.view_train, out.view_test);
    return out;
}

int cmd_train(const CliOptions& opt) {
    const PipelineConfig cfg = load_config(opt);
    cfg.validate();
    const EngagementTarget target = parse_target(opt.target);
    const FittedTarget fitted = fit_target(cfg, target);

    std::string suffix(target_name(target));
    for (auto& c : suffix) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    write_or_print(opt.out_dir, "deviance_" + suffix + ".csv", fitted.deviance.to_csv());
    return 0;
}

int cmd_importance(const CliOptions& opt) {
    const PipelineConfig cfg = load_config(opt);
    cfg.validate();
    const EngagementTarget target = parse_target(opt.target);
    const FittedTarget fitted = fit_target(cfg, target);

    PermutationConfig pc = cfg.permutation;
    pc.seed = perm_seed(cfg.seed, target);
    const ImportanceVector mdi_vec = mdi(fitted.ensemble);
    const ImportanceVector perm_vec = permutation_importance(
        fitted.ensemble, fitted.view_test.x, fitted.view_test.y, pc);
    const Ranking ranking = combined_ranking(mdi_vec, perm_vec);

    std::string suffix(target_name(target));
    for (auto& c : suffix) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    write_or_print(opt.out_dir, "importance_" + suffix + ".csv", ranking.to_csv());
    if (!opt.out_dir.empty()) {
        write_or_print(opt.out_dir, "permutation_detail_" + suffix + ".csv",
                       permutation_detail_csv(fitted.ensemble, fitted.view_test.x,
                                              fitted.view_test.y, pc));
    }
    return 0;
}

int cmd_ahp(const CliOptions& opt) {
    if (opt.input_path.empty()) {
        std::cerr << "ahp: --input <ranking.csv> is required\n";
        return 1;
    }
    PipelineConfig cfg;
    if (!opt.config_path.empty()) cfg = config_from_json(slurp(opt.config_path));
    const EngagementTarget target = parse_target(opt.target);

    std::ifstream in(opt.input_path, std::ios::binary);
    if (!in) throw DataError("cannot open input file " + opt.input_path);
    const Ranking ranking = parse_ranking_csv(in);

    const AhpResult result = evaluate(ranking, cfg.policy_for(target));

    std::cout << "feature,weight_score,percentage\n" << std::fixed;
    for (std::size_t i = 0; i < result.features.size(); ++i) {
        std::cout << result.features[i] << "," << std::setprecision(3)
                  << result.weight_scores[i] << "," << result.percentages[i] << "\n";
    }
    std::cout << std::setprecision(6) << "consistency: lambda_max=" << result.lambda_max
              << " ci=" << result.ci << " cr=" << result.cr << "\n";
    return 0;
}

int cmd_run(const CliOptions& opt) {
    if (opt.out_dir.empty()) {
        std::cerr << "run: --out-dir <path> is required\n";
        return 1;
    }
    const PipelineConfig cfg = load_config(opt);
    const PipelineReport report = run_pipeline(cfg);
    emit_report(report, opt.out_dir);

    std::cout << std::fixed;
    for (const auto& t : report.targets) {
        const auto& top = t.ranking.features.front();
        std::cout << target_name(t.target) << ": top feature " << top.feature
                  << ", weight score " << std::setprecision(3) << t.ahp.weight_scores.front()
                  << ", share " << t.ahp.percentages.front() << "%"
                  << ", CR " << std::setprecision(6) << t.ahp.cr
                  << (t.ahp.consistent ? "" : " (rejected)") << "\n";
    }
    std::cout << "report written to " << opt.out_dir << "\n";

    if (!report.all_consistent()) {
        std::cerr << "one or more comparison matrices failed the consistency check\n";
        return 3;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hierarchy-based engagement evaluation pipeline"};
    app.name("engage-rank");
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    CliOptions opt;
    app.add_option("--config", opt.config_path, "pipeline config JSON");
    auto* seed_opt = app.add_option("--seed", opt.seed, "master seed");
    app.add_option("--input", opt.input_path, "survey CSV (ranking CSV for ahp)");
    app.add_option("--out-dir", opt.out_dir, "output directory");
    app.add_option("--target", opt.target, "engagement target")
        ->check(CLI::IsMember({"be", "ce", "ee"}));

    auto* stats_cmd = app.add_subcommand("stats", "descriptive statistics table");
    auto* synth_cmd = app.add_subcommand("synth", "write a synthetic survey CSV");
    auto* train_cmd = app.add_subcommand("train", "fit one target, emit deviance curve");
    auto* importance_cmd =
        app.add_subcommand("importance", "feature importances for one target");
    auto* ahp_cmd = app.add_subcommand("ahp", "evaluate a ranking file");
    auto* run_cmd = app.add_subcommand("run", "full pipeline, all targets");
    for (auto* sub : {stats_cmd, synth_cmd, train_cmd, importance_cmd, ahp_cmd, run_cmd}) {
        sub->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }
    opt.seed_given = seed_opt->count() > 0;

    try {
        if (*stats_cmd) return cmd_stats(opt);
        if (*synth_cmd) return cmd_synth(opt);
        if (*train_cmd) return cmd_train(opt);
        if (*importance_cmd) return cmd_importance(opt);
        if (*ahp_cmd) return cmd_ahp(opt);
        if (*run_cmd) return cmd_run(opt);
        std::cerr << "no subcommand given\n";
        return 1;
    } catch (const ConsistencyError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
