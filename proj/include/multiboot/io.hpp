#ifndef MULTIBOOT_IO_HPP
#define MULTIBOOT_IO_HPP

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "agreement.hpp"
#include "errors.hpp"
#include "inference.hpp"
#include "model.hpp"
#include "simulate.hpp"

/**
 * @file io.hpp
 *
 * File formats.
 *
 * Predictions (long format, UTF-8, comma-separated, no quoting):
 *
 *     example_id,pretrain_seed,finetune_run,value
 *
 * Labels:
 *
 *     example_id,label[,group_id]
 *
 * Either file may instead be JSONL with one object per row using the same
 * field names. Identifiers containing commas or quotes are rejected.
 */

namespace multiboot {

using ordered_json = nlohmann::ordered_json;

namespace detail {

inline std::string location(std::string_view source, std::size_t line) {
    return std::string(source) + ":" + std::to_string(line);
}

[[noreturn]] inline void parse_fail(std::string_view source, std::size_t line, const std::string& message) {
    throw Error(ErrorKind::ParseError, location(source, line) + ": " + message, std::to_string(line));
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

inline double parse_real(std::string_view text, std::string_view source, std::size_t line, std::string_view field) {
    double value = 0;
    const char* begin = text.data();
    const char* end = text.data() + text.size();
    if (!text.empty() && *begin == '+') {
        ++begin;
    }
    auto res = std::from_chars(begin, end, value);
    if (text.empty() || res.ec != std::errc() || res.ptr != end) {
        parse_fail(source, line, "field '" + std::string(field) + "' is not a number: '" + std::string(text) + "'");
    }
    if (!std::isfinite(value)) {
        throw Error(ErrorKind::NonFiniteValue, location(source, line) + ": field '" + std::string(field) + "' is not finite",
                    std::to_string(line));
    }
    return value;
}

inline std::string parse_identifier(std::string_view text, std::string_view source, std::size_t line, std::string_view field) {
    if (text.empty()) {
        parse_fail(source, line, "field '" + std::string(field) + "' is empty");
    }
    if (text.find('"') != std::string_view::npos) {
        parse_fail(source, line, "quoted identifiers are not supported in field '" + std::string(field) + "'");
    }
    return std::string(text);
}

/// Reads lines, stripping a trailing CR and a leading UTF-8 BOM; skips blank lines.
template<class Visit>
void for_each_line(std::istream& input, Visit visit) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(input, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) {
            line.erase(0, 3);
        }
        if (line.find_first_not_of(" \t") == std::string::npos) {
            continue;
        }
        visit(std::string_view(line), line_no);
    }
}

inline bool looks_like_jsonl(std::istream& input) {
    auto c = input.peek();
    while (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        input.get();
        c = input.peek();
    }
    return c == '{';
}

inline std::string json_identifier(const ordered_json& obj, const char* field, std::string_view source, std::size_t line) {
    auto it = obj.find(field);
    if (it == obj.end()) {
        parse_fail(source, line, std::string("missing field '") + field + "'");
    }
    if (it->is_string()) {
        return parse_identifier(it->get<std::string>(), source, line, field);
    }
    if (it->is_number_integer()) {
        return it->dump();
    }
    parse_fail(source, line, std::string("field '") + field + "' must be a string or integer");
}

inline double json_real(const ordered_json& obj, const char* field, std::string_view source, std::size_t line) {
    auto it = obj.find(field);
    if (it == obj.end()) {
        parse_fail(source, line, std::string("missing field '") + field + "'");
    }
    if (!it->is_number()) {
        parse_fail(source, line, std::string("field '") + field + "' must be a number");
    }
    return it->get<double>();
}

inline ordered_json parse_json_line(std::string_view line, std::string_view source, std::size_t line_no) {
    auto obj = ordered_json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
        parse_fail(source, line_no, "not a JSON object");
    }
    return obj;
}

} // namespace detail

/// Read prediction rows (CSV or JSONL). `source` names the input in diagnostics.
inline std::vector<PredictionRow> read_predictions(std::istream& input, std::string_view source = "<predictions>") {
    std::vector<PredictionRow> rows;
    if (detail::looks_like_jsonl(input)) {
        detail::for_each_line(input, [&](std::string_view line, std::size_t n) {
            auto obj = detail::parse_json_line(line, source, n);
            rows.push_back(PredictionRow{detail::json_identifier(obj, "example_id", source, n),
                                         detail::json_identifier(obj, "pretrain_seed", source, n),
                                         detail::json_identifier(obj, "finetune_run", source, n),
                                         detail::json_real(obj, "value", source, n)});
        });
        return rows;
    }

    bool header = true;
    detail::for_each_line(input, [&](std::string_view line, std::size_t n) {
        if (header) {
            if (line != "example_id,pretrain_seed,finetune_run,value") {
                detail::parse_fail(source, n, "expected header 'example_id,pretrain_seed,finetune_run,value'");
            }
            header = false;
            return;
        }
        auto fields = detail::split_commas(line);
        if (fields.size() != 4) {
            detail::parse_fail(source, n, "expected 4 fields, found " + std::to_string(fields.size()));
        }
        rows.push_back(PredictionRow{detail::parse_identifier(fields[0], source, n, "example_id"),
                                     detail::parse_identifier(fields[1], source, n, "pretrain_seed"),
                                     detail::parse_identifier(fields[2], source, n, "finetune_run"),
                                     detail::parse_real(fields[3], source, n, "value")});
    });
    if (header) {
        detail::parse_fail(source, 1, "file is empty");
    }
    return rows;
}

inline std::vector<LabelRow> read_labels(std::istream& input, std::string_view source = "<labels>") {
    std::vector<LabelRow> rows;
    if (detail::looks_like_jsonl(input)) {
        detail::for_each_line(input, [&](std::string_view line, std::size_t n) {
            auto obj = detail::parse_json_line(line, source, n);
            LabelRow row{detail::json_identifier(obj, "example_id", source, n), detail::json_real(obj, "label", source, n), std::nullopt};
            if (obj.contains("group_id")) {
                row.group_id = detail::json_identifier(obj, "group_id", source, n);
            }
            rows.push_back(std::move(row));
        });
        return rows;
    }

    std::size_t columns = 0;
    detail::for_each_line(input, [&](std::string_view line, std::size_t n) {
        if (columns == 0) {
            if (line == "example_id,label") {
                columns = 2;
            } else if (line == "example_id,label,group_id") {
                columns = 3;
            } else {
                detail::parse_fail(source, n, "expected header 'example_id,label' or 'example_id,label,group_id'");
            }
            return;
        }
        auto fields = detail::split_commas(line);
        if (fields.size() != columns) {
            detail::parse_fail(source, n, "expected " + std::to_string(columns) + " fields, found " + std::to_string(fields.size()));
        }
        LabelRow row{detail::parse_identifier(fields[0], source, n, "example_id"), detail::parse_real(fields[1], source, n, "label"), std::nullopt};
        if (columns == 3) {
            row.group_id = detail::parse_identifier(fields[2], source, n, "group_id");
        }
        rows.push_back(std::move(row));
    });
    if (columns == 0) {
        detail::parse_fail(source, 1, "file is empty");
    }
    return rows;
}

/// Labels of 0 for every example in first-appearance order; for inputs without a labels file.
inline std::vector<LabelRow> placeholder_labels(std::span<const PredictionRow> rows) {
    std::vector<LabelRow> out;
    std::unordered_map<std::string_view, int> seen;
    for (const auto& r : rows) {
        if (seen.emplace(r.example_id, 0).second) {
            out.push_back(LabelRow{r.example_id, 0.0, std::nullopt});
        }
    }
    return out;
}

namespace detail {

inline std::string format_real(double value) {
    char buffer[64];
    auto res = std::to_chars(buffer, buffer + sizeof(buffer), value);
    return std::string(buffer, res.ptr);
}

} // namespace detail

/// Canonical predictions CSV: runs in set order, examples in set order within each run.
inline void write_predictions_csv(std::ostream& out, const PredictionSet& preds) {
    out << "example_id,pretrain_seed,finetune_run,value\n";
    for (std::size_t r = 0; r < preds.n_runs(); ++r) {
        const auto& run = preds.runs()[r];
        auto col = preds.column(r);
        for (std::size_t i = 0; i < preds.n_examples(); ++i) {
            out << preds.example_ids()[i] << ',' << run.pretrain_seed << ',' << run.finetune_run << ','
                << detail::format_real(col[i]) << '\n';
        }
    }
}

inline void write_labels_csv(std::ostream& out, const PredictionSet& preds) {
    const bool groups = preds.has_groups();
    out << (groups ? "example_id,label,group_id\n" : "example_id,label\n");
    for (std::size_t i = 0; i < preds.n_examples(); ++i) {
        out << preds.example_ids()[i] << ',' << detail::format_real(preds.labels()[i]);
        if (groups) {
            out << ',' << (*preds.group_ids())[i];
        }
        out << '\n';
    }
}

inline void write_histogram_csv(std::ostream& out, const Histogram& hist) {
    out << "bin_left,bin_right,count\n";
    for (std::size_t k = 0; k < hist.counts.size(); ++k) {
        out << detail::format_real(hist.edges[k]) << ',' << detail::format_real(hist.edges[k + 1]) << ',' << hist.counts[k] << '\n';
    }
}

/*************************
 ********* JSON **********
 *************************/

inline ordered_json to_json(const DesignSpec& design) {
    ordered_json out;
    out["design"] = to_string(design.design);
    out["axis"] = to_string(design.axis);
    out["nboot"] = design.nboot;
    out["ci_level"] = design.ci_level;
    out["master_seed"] = design.master_seed;
    out["grouped"] = design.grouped;
    if (design.baseline_value) {
        out["baseline_value"] = *design.baseline_value;
    }
    return out;
}

inline ordered_json to_json(const Interval& ci) {
    return ordered_json{{"lower", ci.lower}, {"upper", ci.upper}};
}

/**
 * Report document. Keys, in order: design, metric, nboot, point_estimate,
 * [theta_base, theta_intervention, delta], ci, [p_value, ties_at_zero],
 * [baseline_placement], [arms], samples_mean, samples_sd, histogram,
 * warnings. Bracketed keys appear only for comparison designs.
 */
inline ordered_json to_json(const ComparisonReport& report) {
    ordered_json out;
    out["design"] = to_json(report.design);
    out["metric"] = to_string(report.metric.kind);
    out["nboot"] = report.nboot;
    out["point_estimate"] = report.point_estimate;
    if (report.delta) {
        out["theta_base"] = *report.theta_base;
        out["theta_intervention"] = *report.theta_intervention;
        out["delta"] = *report.delta;
    }
    out["ci"] = to_json(report.ci);
    if (report.p_value) {
        out["p_value"] = *report.p_value;
        out["ties_at_zero"] = report.ties_at_zero.value_or(0);
    }
    if (report.baseline_placement) {
        out["baseline_placement"] = *report.baseline_placement;
    }
    if (report.base_arm && report.intervention_arm) {
        auto arm = [](const ArmSummary& a) {
            ordered_json j;
            j["theta"] = a.theta;
            if (a.ci) {
                j["ci"] = to_json(*a.ci);
            }
            return j;
        };
        out["arms"] = ordered_json{{"base", arm(*report.base_arm)}, {"intervention", arm(*report.intervention_arm)}};
    }
    out["samples_mean"] = report.samples_mean;
    out["samples_sd"] = report.samples_sd;
    out["histogram"] = ordered_json{{"edges", report.histogram.edges}, {"counts", report.histogram.counts}};
    out["warnings"] = report.warnings;
    return out;
}

inline ordered_json to_json(const AgreementReport& report) {
    ordered_json out;
    out["task_kind"] = to_string(report.task_kind);
    out["same_seed_mean"] = report.same_seed_mean;
    out["diff_seed_mean"] = report.diff_seed_mean;
    out["gap"] = report.gap;
    out["n_same_pairs"] = report.n_same_pairs;
    out["n_diff_pairs"] = report.n_diff_pairs;
    return out;
}

inline ordered_json to_json(const SyntheticScenario& sc) {
    ordered_json out;
    out["true_theta"] = sc.true_theta;
    out["true_delta"] = sc.true_delta;
    out["seed_effect_sd"] = sc.seed_effect_sd;
    out["example_effect_sd"] = sc.example_effect_sd;
    out["noise_sd"] = sc.noise_sd;
    out["arm_correlation"] = sc.arm_correlation;
    out["n_x"] = sc.n_x;
    out["n_s"] = sc.n_s;
    out["n_finetune"] = sc.n_finetune;
    return out;
}

inline ordered_json to_json(const CalibrationResult& result) {
    ordered_json out;
    out["nominal_level"] = result.nominal_level;
    out["empirical_coverage"] = result.empirical_coverage;
    out["n_replications"] = result.n_replications;
    out["mc_stderr"] = result.mc_stderr;
    out["variance_ratio"] = result.variance_ratio;
    out["truth"] = result.truth;
    out["mean_point_estimate"] = result.mean_point_estimate;
    out["sampling_sd"] = result.sampling_sd;
    out["mean_bootstrap_sd"] = result.mean_bootstrap_sd;
    if (result.rejection_rate) {
        out["alpha"] = result.alpha;
        out["rejection_rate"] = *result.rejection_rate;
    }
    return out;
}

inline ordered_json to_json(const OracleCheck& check) {
    ordered_json out;
    out["exact_mean"] = check.exact.exact_mean;
    out["exact_variance"] = check.exact.exact_variance;
    out["n_outcomes"] = check.exact.n_outcomes;
    out["mc_mean"] = check.mc_mean;
    out["mc_variance"] = check.mc_variance;
    out["mean_delta"] = check.mc_mean - check.exact.exact_mean;
    out["variance_delta"] = check.mc_variance - check.exact.exact_variance;
    out["mean_z"] = check.mean_z;
    out["variance_z"] = check.variance_z;
    return out;
}

inline ordered_json to_json(const EfficiencyResult& result) {
    ordered_json out;
    out["n_replications"] = result.n_replications;
    out["fraction_paired_smaller"] = result.fraction_paired_smaller;
    out["mean_paired_variance"] = result.mean_paired_variance;
    out["mean_unpaired_variance"] = result.mean_unpaired_variance;
    return out;
}

/// One-row CSV summary of a report (the `csv-summary` output format).
inline void write_csv_summary(std::ostream& out, const ComparisonReport& report) {
    auto opt = [](const std::optional<double>& v) { return v ? detail::format_real(*v) : std::string(); };
    out << "design,axis,metric,nboot,ci_level,master_seed,point_estimate,theta_base,theta_intervention,delta,ci_lower,ci_upper,p_value\n";
    out << to_string(report.design.design) << ',' << to_string(report.design.axis) << ',' << to_string(report.metric.kind) << ','
        << report.nboot << ',' << detail::format_real(report.design.ci_level) << ',' << report.design.master_seed << ','
        << detail::format_real(report.point_estimate) << ',' << opt(report.theta_base) << ',' << opt(report.theta_intervention) << ','
        << opt(report.delta) << ',' << detail::format_real(report.ci.lower) << ',' << detail::format_real(report.ci.upper) << ','
        << opt(report.p_value) << '\n';
}

} // namespace multiboot

#endif
