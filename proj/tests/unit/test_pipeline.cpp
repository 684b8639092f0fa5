#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <engrank/errors.hpp>
#include <engrank/gbrt.hpp>
#include <engrank/pipeline.hpp>
#include <engrank/rng.hpp>
#include <engrank/survey.hpp>

using namespace engrank;
namespace fs = std::filesystem;

namespace {

// Small but non-degenerate: enough rows and stages for real splits in every
// target model, fast enough to run repeatedly.
PipelineConfig small_config() {
    PipelineConfig cfg;
    SynthSpec spec;
    spec.n_rows = 120;
    cfg.synth = spec;
    cfg.train.n_stages = 25;
    cfg.train.max_depth = 3;
    cfg.permutation.repetitions = 3;
    cfg.seed = 99;
    return cfg;
}

struct EnvGuard {
    explicit EnvGuard(const char* name) : name_(name) {
        const char* old = std::getenv(name);
        if (old != nullptr) saved_ = old;
    }
    ~EnvGuard() {
        if (saved_.empty()) {
            ::unsetenv(name_);
        } else {
            ::setenv(name_, saved_.c_str(), 1);
        }
    }
    const char* name_;
    std::string saved_;
};

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

fs::path fresh_dir(const std::string& tag) {
    const fs::path dir = fs::temp_directory_path() / ("engrank-test-" + tag);
    fs::remove_all(dir);
    return dir;
}

}  // namespace

TEST_CASE("config JSON round-trips through a canonical form") {
    PipelineConfig cfg;
    cfg.synth = SynthSpec{};
    const auto text = config_to_json(cfg);
    const auto parsed = config_from_json(text);
    CHECK(config_to_json(parsed) == text);

    PipelineConfig custom;
    custom.input_path = "data/survey.csv";
    custom.train_fraction = 0.75;
    custom.train.n_stages = 50;
    custom.train.learning_rate = 0.05;
    custom.permutation.repetitions = 4;
    custom.permutation.scorer = Scorer::neg_mse;
    custom.ee_policy.preset = TierPreset::custom;
    custom.ee_policy.custom.rank_thresholds = {1.5, 4.5};
    custom.ee_policy.custom.scales = {{3, 7}, {2}};
    custom.seed = 12345;
    const auto text2 = config_to_json(custom);
    const auto parsed2 = config_from_json(text2);
    CHECK(config_to_json(parsed2) == text2);
    CHECK(parsed2.input_path == "data/survey.csv");
    CHECK_FALSE(parsed2.synth.has_value());
    CHECK(parsed2.permutation.scorer == Scorer::neg_mse);
    CHECK(parsed2.ee_policy.preset == TierPreset::custom);
    CHECK(parsed2.ee_policy.custom.rank_thresholds == std::vector<double>{1.5, 4.5});
    CHECK(parsed2.seed == 12345);
}

TEST_CASE("config parsing rejects malformed documents") {
    CHECK_THROWS_AS(config_from_json("not json"), DataError);
    CHECK_THROWS_AS(config_from_json("[1,2]"), DataError);
    CHECK_THROWS_WITH_AS(config_from_json(R"({"seeed": 1})"),
                         doctest::Contains("seeed"), DataError);
    CHECK_THROWS_AS(config_from_json(R"({"permutation": {"scorer": "mae"}})"), DataError);
    CHECK_THROWS_AS(config_from_json(R"({"ahp": {"be": "fancy_style"}})"), DataError);
    CHECK_THROWS_AS(config_from_json(R"({"synth": {"age_band_weights": [1, 2]}})"),
                    DataError);
    CHECK_THROWS_AS(config_from_json(R"({"train": {"n_stages": "many"}})"), DataError);
}

TEST_CASE("config validation requires exactly one input source") {
    PipelineConfig cfg;  // neither input nor synth
    CHECK_THROWS_AS(cfg.validate(), DataError);
    cfg.synth = SynthSpec{};
    cfg.input_path = "also-a-file.csv";  // both
    CHECK_THROWS_AS(cfg.validate(), DataError);
    cfg.input_path.clear();
    CHECK_NOTHROW(cfg.validate());
    cfg.train_fraction = 1.0;
    CHECK_THROWS_AS(cfg.validate(), DataError);
}

TEST_CASE("stage seeds are pinned to their labels") {
    CHECK(synth_seed(42) == derive_seed(42, "synth"));
    CHECK(split_seed(42) == derive_seed(42, "split"));
    CHECK(train_seed(42, EngagementTarget::be) == derive_seed(42, "train:BE"));
    CHECK(train_seed(42, EngagementTarget::ce) == derive_seed(42, "train:CE"));
    CHECK(perm_seed(42, EngagementTarget::ee) == derive_seed(42, "perm:EE"));
    CHECK(train_seed(42, EngagementTarget::be) != train_seed(42, EngagementTarget::ce));
    CHECK(train_seed(42, EngagementTarget::be) != perm_seed(42, EngagementTarget::be));
    CHECK(train_seed(42, EngagementTarget::be) != train_seed(43, EngagementTarget::be));
}

TEST_CASE("run_pipeline assembles all three targets in order") {
    const auto cfg = small_config();
    const auto report = run_pipeline(cfg);

    CHECK(report.targets[0].target == EngagementTarget::be);
    CHECK(report.targets[1].target == EngagementTarget::ce);
    CHECK(report.targets[2].target == EngagementTarget::ee);
    CHECK(report.stats.columns.size() == 13);
    CHECK(report.provenance.seed == 99);
    CHECK(report.provenance.config_json == config_to_json(cfg));

    for (const auto& t : report.targets) {
        CHECK(t.deviance.train_mse.size() == 25);
        CHECK(t.deviance.test_mse.size() == 25);
        const std::size_t d = t.mdi.features.size();
        CHECK(t.permutation.features.size() == d);
        CHECK(t.ranking.features.size() == d);
        // pairwise matrix holds the non-composite criteria only
        CHECK(t.pairwise.size() == d - 2);
        for (const auto& label : t.pairwise.labels) {
            CHECK(label != "BE");
            CHECK(label != "CE");
            CHECK(label != "EE");
        }
        CHECK(t.ahp.features == t.pairwise.labels);
        CHECK(t.ahp.consistent);
    }
    CHECK(report.all_consistent());
}

TEST_CASE("run_pipeline is deterministic across thread caps") {
    EnvGuard guard("ENGAGE_RANK_THREADS");
    const auto cfg = small_config();

    ::setenv("ENGAGE_RANK_THREADS", "3", 1);
    const auto json_parallel = report_to_json(run_pipeline(cfg));
    ::setenv("ENGAGE_RANK_THREADS", "1", 1);
    const auto json_serial = report_to_json(run_pipeline(cfg));
    CHECK(json_parallel == json_serial);

    ::unsetenv("ENGAGE_RANK_THREADS");
    const auto json_default = report_to_json(run_pipeline(cfg));
    CHECK(json_default == json_parallel);
}

TEST_CASE("pipeline_thread_cap clamps and survives junk") {
    EnvGuard guard("ENGAGE_RANK_THREADS");
    ::unsetenv("ENGAGE_RANK_THREADS");
    CHECK(pipeline_thread_cap() == 3);
    ::setenv("ENGAGE_RANK_THREADS", "2", 1);
    CHECK(pipeline_thread_cap() == 2);
    ::setenv("ENGAGE_RANK_THREADS", "0", 1);
    CHECK(pipeline_thread_cap() == 1);
    ::setenv("ENGAGE_RANK_THREADS", "99", 1);
    CHECK(pipeline_thread_cap() == 3);
    ::setenv("ENGAGE_RANK_THREADS", "abc", 1);
    CHECK(pipeline_thread_cap() == 3);
}

TEST_CASE("any stage can be replayed in isolation from its labeled seed") {
    const auto cfg = small_config();
    const auto report = run_pipeline(cfg);

    SynthSpec spec = *cfg.synth;
    spec.seed = synth_seed(cfg.seed);
    const auto table = synthesize(spec);
    const auto [train, test] = split_table(table, cfg.train_fraction, split_seed(cfg.seed));
    const auto view_train = make_target_view(train, EngagementTarget::be);
    const auto view_test = make_target_view(test, EngagementTarget::be);
    TrainConfig tc = cfg.train;
    tc.seed = train_seed(cfg.seed, EngagementTarget::be);
    const auto ensemble = fit_ensemble(view_train, tc);
    const auto curve = staged_deviance(ensemble, view_train, view_test);

    CHECK(curve.train_mse == report.targets[0].deviance.train_mse);
    CHECK(curve.test_mse == report.targets[0].deviance.test_mse);
}

TEST_CASE("run_pipeline reads CSV input through the same path") {
    SynthSpec spec;
    spec.n_rows = 80;
    spec.seed = 1;
    const auto table = synthesize(spec);
    const auto dir = fresh_dir("csv-input");
    fs::create_directories(dir);
    const auto csv_path = dir / "survey.csv";
    {
        std::ofstream out(csv_path, std::ios::binary);
        out << to_csv(table);
    }

    PipelineConfig cfg;
    cfg.input_path = csv_path.string();
    cfg.train.n_stages = 10;
    cfg.permutation.repetitions = 2;
    cfg.seed = 4;
    const auto report = run_pipeline(cfg);
    CHECK(report.targets[0].deviance.train_mse.size() == 10);

    cfg.input_path = (dir / "missing.csv").string();
    CHECK_THROWS_AS(run_pipeline(cfg), DataError);
    fs::remove_all(dir);
}

TEST_CASE("stage errors carry the stage name") {
    PipelineConfig cfg;
    cfg.input_path = "/nonexistent/engrank-no-such-file.csv";
    cfg.seed = 1;
    CHECK_THROWS_WITH_AS(run_pipeline(cfg), doctest::Contains("load"), DataError);
}

TEST_CASE("report JSON carries provenance and all targets") {
    const auto report = run_pipeline(small_config());
    const auto text = report_to_json(report);
    CHECK(text.find("\"tool\"") != std::string::npos);
    CHECK(text.find("\"engage-rank\"") != std::string::npos);
    CHECK(text.find("\"provenance\"") != std::string::npos);
    CHECK(text.find("\"BE\"") != std::string::npos);
    CHECK(text.find("\"CE\"") != std::string::npos);
    CHECK(text.find("\"EE\"") != std::string::npos);
    CHECK(text.find("\"lambda_max\"") != std::string::npos);
    CHECK(text.back() == '\n');
}

TEST_CASE("evaluation matrix blanks out excluded features") {
    const auto report = run_pipeline(small_config());
    const auto csv = evaluation_matrix_csv(report);
    std::istringstream lines(csv);
    std::string line;
    REQUIRE(std::getline(lines, line));
    CHECK(line == "target,row,BL,B-Act,B-Int,B-Gro,C-Mgt,C-Com,E-Int,E-Sat,Gender,Age");

    REQUIRE(std::getline(lines, line));  // BE weight_score row
    CHECK(line.rfind("BE,weight_score,", 0) == 0);
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream row(line);
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    REQUIRE(cells.size() == 12);
    // behavior columns are not part of the BE matrix
    CHECK(cells[3].empty());   // B-Act
    CHECK(cells[4].empty());   // B-Int
    CHECK(cells[5].empty());   // B-Gro
    CHECK_FALSE(cells[2].empty());   // BL
    CHECK_FALSE(cells[10].empty());  // Gender
    int data_rows = 1;
    while (std::getline(lines, line)) ++data_rows;
    CHECK(data_rows == 6);  // weight + percentage per target
}

TEST_CASE("emit_report writes the full artifact set reproducibly") {
    const auto report = run_pipeline(small_config());
    const auto dir = fresh_dir("emit");
    emit_report(report, dir.string());

    const std::vector<std::string> expected = {
        "report.json",       "stats.csv",          "deviance_be.csv",
        "deviance_ce.csv",   "deviance_ee.csv",    "importance_be.csv",
        "importance_ce.csv", "importance_ee.csv",  "pairwise_be.csv",
        "pairwise_ce.csv",   "pairwise_ee.csv",    "evaluation_matrix.csv"};
    for (const auto& name : expected) {
        CHECK(fs::exists(dir / name));
    }
    std::size_t file_count = 0;
    for (const auto& entry : fs::directory_iterator(dir)) {
        ++file_count;
        CHECK(entry.path().filename().string().rfind(".tmp-", 0) != 0);
    }
    CHECK(file_count == expected.size());

    std::vector<std::string> before;
    for (const auto& name : expected) before.push_back(read_file(dir / name));
    emit_report(report, dir.string());
    for (std::size_t i = 0; i < expected.size(); ++i) {
        CHECK(read_file(dir / expected[i]) == before[i]);
    }
    fs::remove_all(dir);
}

TEST_CASE("emit_report refuses an incomplete report") {
    auto report = run_pipeline(small_config());
    report.targets[1].deviance.train_mse.clear();
    const auto dir = fresh_dir("emit-incomplete");
    CHECK_THROWS_AS(emit_report(report, dir.string()), Error);
    CHECK_FALSE(fs::exists(dir));
}

TEST_CASE("ranking CSV round-trips") {
    const auto report = run_pipeline(small_config());
    const auto& ranking = report.targets[0].ranking;
    std::istringstream in(ranking.to_csv());
    const auto back = parse_ranking_csv(in);
    REQUIRE(back.features.size() == ranking.features.size());
    for (std::size_t i = 0; i < back.features.size(); ++i) {
        CHECK(back.features[i].feature == ranking.features[i].feature);
        CHECK(back.features[i].mdi_score == ranking.features[i].mdi_score);
        CHECK(back.features[i].perm_score == ranking.features[i].perm_score);
        CHECK(back.features[i].mdi_rank == ranking.features[i].mdi_rank);
        CHECK(back.features[i].avg_rank == ranking.features[i].avg_rank);
        CHECK(back.features[i].disagreement == ranking.features[i].disagreement);
    }

    std::istringstream bad_header("feature,mdi\nBL,1\n");
    CHECK_THROWS_AS(parse_ranking_csv(bad_header), DataError);
    std::istringstream bad_cell(
        "feature,mdi,permutation,mdi_rank,perm_rank,avg_rank,disagreement_flag\n"
        "BL,x,0.5,1,1,1,0\n");
    CHECK_THROWS_WITH_AS(parse_ranking_csv(bad_cell), doctest::Contains("row 1"),
                         DataError);
    std::istringstream empty(
        "feature,mdi,permutation,mdi_rank,perm_rank,avg_rank,disagreement_flag\n");
    CHECK_THROWS_AS(parse_ranking_csv(empty), DataError);
}

TEST_CASE("default policies follow the published presets") {
    PipelineConfig cfg;
    CHECK(cfg.policy_for(EngagementTarget::be).preset == TierPreset::be_style);
    CHECK(cfg.policy_for(EngagementTarget::ce).preset == TierPreset::ce_ee_style);
    CHECK(cfg.policy_for(EngagementTarget::ee).preset == TierPreset::ce_ee_style);
}
