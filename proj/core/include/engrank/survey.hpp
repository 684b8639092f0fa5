#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace engrank {

// Raw CSV schema, lowercase, in file order.
inline constexpr std::array<std::string_view, 10> kRawColumns = {
    "gender", "age_band", "bl",
    "b_act", "b_int", "b_gro", "c_mgt", "c_com", "e_int", "e_sat"};

// One respondent. Measure scores are seven-point Likert aggregates kept as
// reals in [1, 7].
struct SurveyRecord {
    int gender = 0;    // 0 male, 1 female
    int age_band = 0;  // 0: under 18, 1: 18-21, 2: 22-25, 3: 26+
    int bl = 0;        // 1 iff the online share of learning is in the blended range
    double b_act = 1.0;
    double b_int = 1.0;
    double b_gro = 1.0;
    double c_mgt = 1.0;
    double c_com = 1.0;
    double e_int = 1.0;
    double e_sat = 1.0;
};

struct CompositeScores {
    double be = 0.0;  // mean(b_act, b_int, b_gro)
    double ce = 0.0;  // mean(c_mgt, c_com)
    double ee = 0.0;  // mean(e_int, e_sat)
};

// Row-stable rectangular table. Treated as immutable: every operation takes
// a const table and returns a new one, so tables are safe to share across
// threads.
struct SurveyTable {
    std::vector<SurveyRecord> records;
    std::vector<CompositeScores> composites;  // parallel to records when present
    bool composites_present = false;

    std::size_t size() const noexcept { return records.size(); }
};

struct ColumnStats {
    std::string column;
    double mean = 0.0;
    double std_dev = 0.0;
    std::optional<double> skewness;         // empty: undefined (constant / too short)
    std::optional<double> excess_kurtosis;  // empty: undefined
};

struct StatsTable {
    std::vector<ColumnStats> columns;

    const ColumnStats* find(std::string_view name) const;
    std::string to_csv() const;  // column,mean,std,skewness,kurtosis
};

enum class EngagementTarget { be, ce, ee };

std::string_view target_name(EngagementTarget t);  // "BE" / "CE" / "EE"
std::optional<EngagementTarget> target_from_string(std::string_view s);

struct RegressionProblem {
    std::string target;                  // display name of the target column
    std::vector<std::string> features;   // display names, fixed per-target order
    std::vector<std::vector<double>> x;  // row-major, one row per record
    std::vector<double> y;
};

struct MeasureProfile {
    double base = 4.0;        // measure mean before the blended-learning shift
    double dispersion = 1.0;  // noise standard deviation at noise_scale = 1
};

// Synthetic stand-in for a survey file. Generation is a pure function of the
// spec: per row, the draws are gender, age_band, bl, then one normal per
// measure in schema order.
struct SynthSpec {
    std::size_t n_rows = 1132;
    std::uint64_t seed = 0;
    double bl_probability = 0.4488;
    double bl_effect = 1.5;    // additive shift on every measure when bl = 1
    double noise_scale = 1.0;  // multiplies each measure's dispersion
    double gender_probability = 0.693;
    std::array<double, 4> age_band_weights = {0.08, 0.60, 0.22, 0.10};
    std::array<MeasureProfile, 7> measures = default_measure_profiles();

    static std::array<MeasureProfile, 7> default_measure_profiles();
    void validate() const;  // throws DataError
};

// Reads the raw schema from a UTF-8 byte stream. Extra columns are ignored;
// composites are never taken from the file.
SurveyTable parse_survey_csv(std::istream& source);

SurveyTable compute_composites(const SurveyTable& table);

StatsTable descriptive_stats(const SurveyTable& table);

// Seeded shuffle split; both halves keep the original row order. Train size
// is round(n * train_fraction).
std::pair<SurveyTable, SurveyTable> split_table(const SurveyTable& table,
                                                double train_fraction,
                                                std::uint64_t seed);

RegressionProblem make_target_view(const SurveyTable& table, EngagementTarget target);

// BE, CE, EE views in that order.
std::array<RegressionProblem, 3> make_target_views(const SurveyTable& table);

SurveyTable synthesize(const SynthSpec& spec);

// Raw 10-column schema; parse_survey_csv round-trips it.
std::string to_csv(const SurveyTable& table);

}  // namespace engrank
