#include "engrank/survey.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <functional>
#include <istream>
#include <sstream>

#include "engrank/csv.hpp"
#include "engrank/errors.hpp"
#include "engrank/moments.hpp"
#include "engrank/rng.hpp"

namespace engrank {

namespace {

double parse_double_cell(const std::string& cell, std::size_t row, std::string_view column) {
    double value = 0.0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
        throw DataError("row " + std::to_string(row) + ", column " + std::string(column) +
                        ": cannot parse '" + cell + "' as a number");
    }
    return value;
}

int parse_int_cell(const std::string& cell, std::size_t row, std::string_view column) {
    int value = 0;
    const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
        throw DataError("row " + std::to_string(row) + ", column " + std::string(column) +
                        ": cannot parse '" + cell + "' as an integer");
    }
    return value;
}

void check_range_int(int value, int lo, int hi, std::size_t row, std::string_view column) {
    if (value < lo || value > hi) {
        throw DataError("row " + std::to_string(row) + ", column " + std::string(column) +
                        ": value " + std::to_string(value) + " out of range [" +
                        std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
}

void check_range_measure(double value, std::size_t row, std::string_view column) {
    if (!(value >= 1.0 && value <= 7.0)) {
        std::ostringstream msg;
        msg << "row " << row << ", column " << column << ": value " << value
            << " out of range [1, 7]";
        throw DataError(msg.str());
    }
}

CompositeScores composites_of(const SurveyRecord& r) {
    CompositeScores c;
    c.be = (r.b_act + r.b_int + r.b_gro) / 3.0;
    c.ce = (r.c_mgt + r.c_com) / 2.0;
    c.ee = (r.e_int + r.e_sat) / 2.0;
    return c;
}

}  // namespace

const ColumnStats* StatsTable::find(std::string_view name) const {
    for (const auto& c : columns) {
        if (c.column == name) return &c;
    }
    return nullptr;
}

std::string StatsTable::to_csv() const {
    std::string out = "column,mean,std,skewness,kurtosis\n";
    for (const auto& c : columns) {
        std::vector<std::string> cells = {c.column, format_double(c.mean),
                                          format_double(c.std_dev)};
        cells.push_back(c.skewness ? format_double(*c.skewness) : "");
        cells.push_back(c.excess_kurtosis ? format_double(*c.excess_kurtosis) : "");
        out += join_csv_row(cells);
    }
    return out;
}

std::string_view target_name(EngagementTarget t) {
    switch (t) {
        case EngagementTarget::be: return "BE";
        case EngagementTarget::ce: return "CE";
        case EngagementTarget::ee: return "EE";
    }
    throw Error("target_name: bad enum value");
}

std::optional<EngagementTarget> target_from_string(std::string_view s) {
    std::string lower(s);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "be") return EngagementTarget::be;
    if (lower == "ce") return EngagementTarget::ce;
    if (lower == "ee") return EngagementTarget::ee;
    return std::nullopt;
}

SurveyTable parse_survey_csv(std::istream& source) {
    const CsvDocument doc = read_csv(source);

    std::array<std::size_t, kRawColumns.size()> col_index{};
    for (std::size_t c = 0; c < kRawColumns.size(); ++c) {
        const auto it = std::find(doc.header.begin(), doc.header.end(),
                                  std::string(kRawColumns[c]));
        if (it == doc.header.end()) {
            throw DataError("missing column: " + std::string(kRawColumns[c]));
        }
        col_index[c] = static_cast<std::size_t>(it - doc.header.begin());
    }

    SurveyTable table;
    table.records.reserve(doc.rows.size());
    for (std::size_t i = 0; i < doc.rows.size(); ++i) {
        const auto& cells = doc.rows[i];
        const std::size_t row = i + 1;
        if (cells.size() < doc.header.size()) {
            throw DataError("row " + std::to_string(row) + ": expected " +
                            std::to_string(doc.header.size()) + " cells, got " +
                            std::to_string(cells.size()));
        }
        auto cell = [&](std::size_t c) -> const std::string& { return cells[col_index[c]]; };

        SurveyRecord r;
        r.gender = parse_int_cell(cell(0), row, kRawColumns[0]);
        check_range_int(r.gender, 0, 1, row, kRawColumns[0]);
        r.age_band = parse_int_cell(cell(1), row, kRawColumns[1]);
        check_range_int(r.age_band, 0, 3, row, kRawColumns[1]);
        r.bl = parse_int_cell(cell(2), row, kRawColumns[2]);
        check_range_int(r.bl, 0, 1, row, kRawColumns[2]);

        double* const measures[] = {&r.b_act, &r.b_int, &r.b_gro, &r.c_mgt,
                                    &r.c_com, &r.e_int, &r.e_sat};
        for (std::size_t m = 0; m < 7; ++m) {
            const std::string_view name = kRawColumns[3 + m];
            *measures[m] = parse_double_cell(cell(3 + m), row, name);
            check_range_measure(*measures[m], row, name);
        }
        table.records.push_back(r);
    }
    return table;
}

SurveyTable compute_composites(const SurveyTable& table) {
    SurveyTable out = table;
    out.composites.resize(out.records.size());
    for (std::size_t i = 0; i < out.records.size(); ++i) {
        out.composites[i] = composites_of(out.records[i]);
    }
    out.composites_present = true;
    return out;
}

StatsTable descriptive_stats(const SurveyTable& table) {
    if (table.records.empty()) throw DataError("descriptive_stats: empty table");

    using Getter = std::function<double(std::size_t)>;
    std::vector<std::pair<std::string, Getter>> columns;
    columns.reserve(kRawColumns.size() + 3);
    const auto& recs = table.records;
    columns.emplace_back("gender", [&](std::size_t i) { return double(recs[i].gender); });
    columns.emplace_back("age_band", [&](std::size_t i) { return double(recs[i].age_band); });
    columns.emplace_back("bl", [&](std::size_t i) { return double(recs[i].bl); });
    columns.emplace_back("b_act", [&](std::size_t i) { return recs[i].b_act; });
    columns.emplace_back("b_int", [&](std::size_t i) { return recs[i].b_int; });
    columns.emplace_back("b_gro", [&](std::size_t i) { return recs[i].b_gro; });
    columns.emplace_back("c_mgt", [&](std::size_t i) { return recs[i].c_mgt; });
    columns.emplace_back("c_com", [&](std::size_t i) { return recs[i].c_com; });
    columns.emplace_back("e_int", [&](std::size_t i) { return recs[i].e_int; });
    columns.emplace_back("e_sat", [&](std::size_t i) { return recs[i].e_sat; });
    if (table.composites_present) {
        const auto& comp = table.composites;
        columns.emplace_back("be", [&comp](std::size_t i) { return comp[i].be; });
        columns.emplace_back("ce", [&comp](std::size_t i) { return comp[i].ce; });
        columns.emplace_back("ee", [&comp](std::size_t i) { return comp[i].ee; });
    }

    StatsTable stats;
    for (const auto& [name, get] : columns) {
        RunningMoments acc;
        for (std::size_t i = 0; i < recs.size(); ++i) acc.push(get(i));
        ColumnStats c;
        c.column = name;
        c.mean = acc.mean();
        c.std_dev = acc.sample_std();
        c.skewness = acc.sample_skewness();
        c.excess_kurtosis = acc.sample_excess_kurtosis();
        stats.columns.push_back(std::move(c));
    }
    return stats;
}

std::pair<SurveyTable, SurveyTable> split_table(const SurveyTable& table,
                                                double train_fraction,
                                                std::uint64_t seed) {
    if (table.records.empty()) throw DataError("split: empty table");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw DataError("split: train_fraction must lie in (0, 1)");
    }

    const std::size_t n = table.records.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);
    shuffle(order, rng);

    const auto n_train = static_cast<std::size_t>(
        std::llround(static_cast<double>(n) * train_fraction));
    std::vector<std::size_t> train_idx(order.begin(), order.begin() + n_train);
    std::vector<std::size_t> test_idx(order.begin() + n_train, order.end());
    // both halves keep the original row order
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());

    auto take = [&](const std::vector<std::size_t>& idx) {
        SurveyTable part;
        part.composites_present = table.composites_present;
        part.records.reserve(idx.size());
        if (part.composites_present) part.composites.reserve(idx.size());
        for (const std::size_t i : idx) {
            part.records.push_back(table.records[i]);
            if (part.composites_present) part.composites.push_back(table.composites[i]);
        }
        return part;
    };
    return {take(train_idx), take(test_idx)};
}

RegressionProblem make_target_view(const SurveyTable& table, EngagementTarget target) {
    if (!table.composites_present) {
        throw DataError("make_target_view: composites missing; run compute_composites first");
    }

    // Per-target feature lists, in fixed column order.
    static const std::vector<std::string> kBeFeatures = {
        "Gender", "Age", "BL", "C-Mgt", "C-Com", "E-Int", "E-Sat", "CE", "EE"};
    static const std::vector<std::string> kCeFeatures = {
        "Gender", "Age", "BL", "B-Act", "B-Int", "B-Gro", "E-Int", "E-Sat", "BE", "EE"};
    static const std::vector<std::string> kEeFeatures = {
        "Gender", "Age", "BL", "B-Act", "B-Int", "B-Gro", "C-Mgt", "C-Com", "BE", "CE"};

    auto value_of = [&](std::string_view name, std::size_t i) -> double {
        const SurveyRecord& r = table.records[i];
        const CompositeScores& c = table.composites[i];
        if (name == "Gender") return double(r.gender);
        if (name == "Age") return double(r.age_band);
        if (name == "BL") return double(r.bl);
        if (name == "B-Act") return r.b_act;
        if (name == "B-Int") return r.b_int;
        if (name == "B-Gro") return r.b_gro;
        if (name == "C-Mgt") return r.c_mgt;
        if (name == "C-Com") return r.c_com;
        if (name == "E-Int") return r.e_int;
        if (name == "E-Sat") return r.e_sat;
        if (name == "BE") return c.be;
        if (name == "CE") return c.ce;
        if (name == "EE") return c.ee;
        throw Error("unknown feature: " + std::string(name));
    };

    RegressionProblem problem;
    problem.target = std::string(target_name(target));
    switch (target) {
        case EngagementTarget::be: problem.features = kBeFeatures; break;
        case EngagementTarget::ce: problem.features = kCeFeatures; break;
        case EngagementTarget::ee: problem.features = kEeFeatures; break;
    }

    const std::size_t n = table.records.size();
    problem.x.resize(n);
    problem.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        problem.x[i].reserve(problem.features.size());
        for (const auto& f : problem.features) problem.x[i].push_back(value_of(f, i));
        switch (target) {
            case EngagementTarget::be: problem.y[i] = table.composites[i].be; break;
            case EngagementTarget::ce: problem.y[i] = table.composites[i].ce; break;
            case EngagementTarget::ee: problem.y[i] = table.composites[i].ee; break;
        }
    }
    return problem;
}

std::array<RegressionProblem, 3> make_target_views(const SurveyTable& table) {
    return {make_target_view(table, EngagementTarget::be),
            make_target_view(table, EngagementTarget::ce),
            make_target_view(table, EngagementTarget::ee)};
}

std::array<MeasureProfile, 7> SynthSpec::default_measure_profiles() {
    // Base means and dispersions back out of the published column moments
    // under a 1.5-point blended-learning shift at 44.88% prevalence.
    return {{{3.996, 1.380},    // b_act
             {3.988, 1.334},    // b_int
             {3.902, 1.477},    // b_gro
             {3.973, 1.551},    // c_mgt
             {3.807, 1.500},    // c_com
             {4.193, 1.630},    // e_int
             {3.996, 1.618}}};  // e_sat
}

void SynthSpec::validate() const {
    if (n_rows == 0) throw DataError("synth: n_rows must be positive");
    if (!(bl_probability > 0.0 && bl_probability < 1.0)) {
        throw DataError("synth: bl_probability must lie in (0, 1)");
    }
    if (!(bl_effect >= 0.0)) throw DataError("synth: bl_effect must be >= 0");
    if (!(noise_scale >= 0.0)) throw DataError("synth: noise_scale must be >= 0");
    if (!(gender_probability >= 0.0 && gender_probability <= 1.0)) {
        throw DataError("synth: gender_probability must lie in [0, 1]");
    }
    double weight_sum = 0.0;
    for (const double w : age_band_weights) {
        if (!(w >= 0.0)) throw DataError("synth: age_band_weights must be >= 0");
        weight_sum += w;
    }
    if (!(weight_sum > 0.0)) throw DataError("synth: age_band_weights sum to zero");
    for (const auto& m : measures) {
        if (!(m.base >= 1.0 && m.base <= 7.0)) {
            throw DataError("synth: measure base mean must lie in [1, 7]");
        }
        if (!(m.dispersion >= 0.0)) throw DataError("synth: dispersion must be >= 0");
    }
}

SurveyTable synthesize(const SynthSpec& spec) {
    spec.validate();

    double weight_sum = 0.0;
    for (const double w : spec.age_band_weights) weight_sum += w;

    Rng rng(spec.seed);
    SurveyTable table;
    table.records.reserve(spec.n_rows);
    for (std::size_t i = 0; i < spec.n_rows; ++i) {
        SurveyRecord r;
        // fixed draw order per row: gender, age band, bl, then one normal
        // per measure in schema order
        r.gender = rng.next_bernoulli(spec.gender_probability) ? 1 : 0;
        const double u = rng.next_double() * weight_sum;
        double cumulative = 0.0;
        r.age_band = static_cast<int>(spec.age_band_weights.size()) - 1;
        for (std::size_t b = 0; b < spec.age_band_weights.size(); ++b) {
            cumulative += spec.age_band_weights[b];
            if (u < cumulative) {
                r.age_band = static_cast<int>(b);
                break;
            }
        }
        r.bl = rng.next_bernoulli(spec.bl_probability) ? 1 : 0;

        double* const measures[] = {&r.b_act, &r.b_int, &r.b_gro, &r.c_mgt,
                                    &r.c_com, &r.e_int, &r.e_sat};
        for (std::size_t m = 0; m < 7; ++m) {
            const MeasureProfile& p = spec.measures[m];
            const double value = p.base + spec.bl_effect * r.bl +
                                 spec.noise_scale * p.dispersion * rng.next_normal();
            *measures[m] = std::clamp(value, 1.0, 7.0);
        }
        table.records.push_back(r);
    }
    return compute_composites(table);
}

std::string to_csv(const SurveyTable& table) {
    std::vector<std::string> header(kRawColumns.begin(), kRawColumns.end());
    std::string out = join_csv_row(header);
    for (const auto& r : table.records) {
        out += join_csv_row({std::to_string(r.gender), std::to_string(r.age_band),
                             std::to_string(r.bl), format_double(r.b_act),
                             format_double(r.b_int), format_double(r.b_gro),
                             format_double(r.c_mgt), format_double(r.c_com),
                             format_double(r.e_int), format_double(r.e_sat)});
    }
    return out;
}

}  // namespace engrank
