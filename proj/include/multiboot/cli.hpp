#ifndef MULTIBOOT_CLI_HPP
#define MULTIBOOT_CLI_HPP

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "agreement.hpp"
#include "analysis.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "model.hpp"
#include "simulate.hpp"

/**
 * @file cli.hpp
 *
 * The `multiboot` command line: `estimate`, `compare`, `agreement` and
 * `validate`. `run_cli()` holds all logic so tests can drive it in-process.
 *
 * Exit codes: 0 success, 2 input/format error, 3 statistical error.
 */

namespace multiboot::cli {

enum ExitCode : int { exit_ok = 0, exit_input = 2, exit_statistical = 3 };

struct AnalysisConfig {
    std::string predictions;
    std::string predictions_b;
    std::string labels;
    std::string metric = "accuracy";
    std::string design;
    std::optional<double> baseline_value;
    std::string axis = "both";
    bool groups = false;
    std::size_t nboot = 1000;
    double level = 0.95;
    unsigned long long seed = 0;
    std::string out;
    std::string format = "json";
    std::string histogram_out;
    bool regression = false;
    std::string scenario;
    std::string study;
    std::size_t threads = 0;
};

namespace detail {

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::ParseError, "cannot open '" + path + "'", path);
    }
    return in;
}

inline PredictionSet load_set(const std::string& predictions, const std::string& labels) {
    auto in = open_input(predictions);
    auto rows = read_predictions(in, predictions);
    std::vector<LabelRow> label_rows;
    if (labels.empty()) {
        label_rows = placeholder_labels(rows);
    } else {
        auto lin = open_input(labels);
        label_rows = read_labels(lin, labels);
    }
    return build_prediction_set(rows, label_rows);
}

inline MetricSpec parse_metric(const std::string& name) {
    static const std::map<std::string, MetricKind> kinds{
        {"accuracy", MetricKind::accuracy}, {"pearson", MetricKind::pearson}, {"mean-of-scores", MetricKind::mean_of_scores}};
    return MetricSpec{kinds.at(name), Direction::higher_is_better};
}

inline Axis parse_axis(const std::string& name) {
    static const std::map<std::string, Axis> axes{{"both", Axis::both}, {"seeds", Axis::seeds_only}, {"examples", Axis::examples_only}};
    return axes.at(name);
}

inline DesignSpec design_from(const AnalysisConfig& config, Design design) {
    DesignSpec spec;
    spec.design = design;
    spec.axis = parse_axis(config.axis);
    spec.nboot = config.nboot;
    spec.ci_level = config.level;
    spec.master_seed = config.seed;
    spec.grouped = config.groups;
    if (design == Design::fixed_baseline) {
        spec.baseline_value = config.baseline_value;
    }
    spec.validate();
    return spec;
}

inline std::string fixed3(double v) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.3f", v);
    return buffer;
}

inline std::string format_p(double p) {
    return p < 0.001 ? "< 0.001" : fixed3(p);
}

/// Write `document` to `--out` (or to `fallback` when no path was given).
inline void emit(const AnalysisConfig& config, const std::string& document, std::ostream& fallback) {
    if (config.out.empty()) {
        fallback << document;
        return;
    }
    std::ofstream file(config.out, std::ios::binary);
    if (!file) {
        throw Error(ErrorKind::ParseError, "cannot write '" + config.out + "'", config.out);
    }
    file << document;
}

inline std::string render_report(const AnalysisConfig& config, const ComparisonReport& report) {
    std::ostringstream doc;
    if (config.format == "csv-summary") {
        write_csv_summary(doc, report);
    } else {
        doc << to_json(report).dump(2) << '\n';
    }
    return doc.str();
}

inline void write_histogram(const AnalysisConfig& config, const ComparisonReport& report) {
    if (config.histogram_out.empty()) {
        return;
    }
    std::ofstream file(config.histogram_out, std::ios::binary);
    if (!file) {
        throw Error(ErrorKind::ParseError, "cannot write '" + config.histogram_out + "'", config.histogram_out);
    }
    write_histogram_csv(file, report.histogram);
}

} // namespace detail

inline int cmd_estimate(const AnalysisConfig& config, std::ostream& out, std::ostream&) {
    auto preds = detail::load_set(config.predictions, config.labels);
    auto metric = detail::parse_metric(config.metric);
    auto design = detail::design_from(config, Design::single);

    auto report = make_report(estimate(preds, metric, design, config.threads), design, metric);
    detail::emit(config, detail::render_report(config, report), out);
    detail::write_histogram(config, report);
    if (!config.out.empty()) {
        out << to_string(metric.kind) << " theta = " << detail::fixed3(report.point_estimate) << "  " << config.level * 100
            << "% CI [" << detail::fixed3(report.ci.lower) << ", " << detail::fixed3(report.ci.upper) << "]\n";
    }
    return exit_ok;
}

/// Table laid out as θ_base, θ_intervention, δ, p.
inline void render_comparison_table(std::ostream& table, const ComparisonReport& report) {
    table << std::left << std::setw(16) << "metric" << std::setw(12) << "theta_base" << std::setw(20) << "theta_intervention"
          << std::setw(10) << "delta" << "p_value\n";
    table << std::left << std::setw(16) << to_string(report.metric.kind) << std::setw(12) << detail::fixed3(*report.theta_base)
          << std::setw(20) << detail::fixed3(*report.theta_intervention) << std::setw(10) << detail::fixed3(*report.delta)
          << detail::format_p(*report.p_value) << '\n';
    table << "delta " << report.design.ci_level * 100 << "% CI [" << detail::fixed3(report.ci.lower) << ", "
          << detail::fixed3(report.ci.upper) << "], nboot = " << report.nboot << '\n';
    for (const auto& w : report.warnings) {
        table << "warning: " << w << '\n';
    }
}

inline int cmd_compare(const AnalysisConfig& config, std::ostream& out, std::ostream& err) {
    auto metric = detail::parse_metric(config.metric);
    BootstrapResult result;
    DesignSpec design;
    std::vector<std::string> warnings;

    if (config.design == "baseline") {
        if (!config.baseline_value) {
            throw Error(ErrorKind::InvalidArgument, "--design baseline needs --baseline-value");
        }
        if (!config.predictions_b.empty()) {
            throw Error(ErrorKind::InvalidArgument, "--design baseline takes a single --predictions file");
        }
        design = detail::design_from(config, Design::fixed_baseline);
        auto preds = detail::load_set(config.predictions, config.labels);
        result = compare_to_baseline(preds, metric, design, config.threads);
    } else {
        if (config.predictions_b.empty()) {
            throw Error(ErrorKind::InvalidArgument, "--design " + config.design + " needs --predictions-b");
        }
        if (config.baseline_value) {
            throw Error(ErrorKind::InvalidArgument, "--baseline-value only applies to --design baseline");
        }
        auto base = detail::load_set(config.predictions, config.labels);
        auto other = detail::load_set(config.predictions_b, config.labels);
        if (config.design == "paired") {
            design = detail::design_from(config, Design::paired);
            auto pair = align_paired(base, other);
            if (pair.ragged_runs()) {
                warnings.push_back("fine-tuning run counts per seed differ between arms");
            }
            result = compare_paired(pair, metric, design, config.threads);
        } else {
            design = detail::design_from(config, Design::unpaired);
            result = compare_unpaired(base, other, metric, design, config.threads);
        }
    }

    auto report = make_report(result, design, metric);
    report.warnings = warnings;
    detail::emit(config, detail::render_report(config, report), out);
    detail::write_histogram(config, report);
    render_comparison_table(config.out.empty() ? err : out, report);
    return exit_ok;
}

inline int cmd_agreement(const AnalysisConfig& config, std::ostream& out, std::ostream& err) {
    auto preds = detail::load_set(config.predictions, config.labels);
    auto report = agreement_matrix(preds, config.regression ? TaskKind::regression : TaskKind::classification);
    detail::emit(config, to_json(report).dump(2) + "\n", out);

    std::ostream& table = config.out.empty() ? err : out;
    table << std::left << std::setw(8) << "same" << std::setw(8) << "diff" << "gap\n"
          << std::setw(8) << detail::fixed3(report.same_seed_mean) << std::setw(8) << detail::fixed3(report.diff_seed_mean)
          << detail::fixed3(report.gap) << '\n';
    return exit_ok;
}

inline int cmd_validate(const AnalysisConfig& config, std::ostream& out, std::ostream&) {
    auto in = detail::open_input(config.scenario);
    ScenarioFile file = parse_scenario(in);
    if (!config.study.empty()) {
        std::istringstream override_study("study = " + config.study);
        file.study = parse_scenario(override_study).study;
    }

    Design design_kind = Design::single;
    if (config.design == "paired") design_kind = Design::paired;
    else if (config.design == "unpaired") design_kind = Design::unpaired;
    else if (config.design == "baseline") design_kind = Design::fixed_baseline;
    auto design = detail::design_from(config, design_kind);

    ordered_json doc;
    doc["scenario"] = to_json(file.scenario);
    doc["design"] = to_json(design);
    const bool all = file.study == StudyKind::all;

    if (all || file.study == StudyKind::coverage) {
        doc["coverage"] = to_json(coverage_study(file.scenario, design, file.replications, file.alpha, config.threads));
    }
    if (all || file.study == StudyKind::efficiency) {
        doc["efficiency"] = to_json(efficiency_study(file.scenario, file.replications, design.nboot, design.master_seed, config.threads));
    }
    if (all || file.study == StudyKind::oracle) {
        RngStream rng(derive_seed(design.master_seed, 3, 0), 0);
        auto preds = generate(file.scenario, rng);
        doc["oracle"] = to_json(compare_with_oracle(preds, MetricSpec{MetricKind::mean_of_scores}, design.nboot, design.master_seed, config.threads));
    }
    detail::emit(config, doc.dump(2) + "\n", out);
    return exit_ok;
}

/**
 * Parse `args` (without the program name) and run the subcommand. Report
 * documents go to `--out`, or to `out` when no path is given; diagnostics go
 * to `err`.
 */
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multi-seed bootstrap inference for model evaluations", "multiboot"};
    app.require_subcommand(1);
    AnalysisConfig config;

    const std::vector<std::string> axes{"both", "seeds", "examples"};

    auto add_data = [&](CLI::App* sub, bool labels) {
        sub->add_option("--predictions", config.predictions, "Predictions file (CSV or JSONL)")->required()->check(CLI::ExistingFile);
        if (labels) {
            sub->add_option("--labels", config.labels, "Labels file (CSV or JSONL)")->check(CLI::ExistingFile);
        }
    };
    auto add_bootstrap = [&](CLI::App* sub) {
        sub->add_option("--metric", config.metric, "accuracy | pearson | mean-of-scores")->check(CLI::IsMember({"accuracy", "pearson", "mean-of-scores"}));
        sub->add_option("--axis", config.axis, "both | seeds | examples")->check(CLI::IsMember(axes));
        sub->add_flag("--groups", config.groups, "Resample example groups as blocks");
        sub->add_option("--nboot", config.nboot, "Bootstrap samples")->check(CLI::PositiveNumber);
        sub->add_option("--level", config.level, "Confidence level")->check(CLI::Range(0.0, 1.0));
        sub->add_option("--seed", config.seed, "Master random seed");
        sub->add_option("--out", config.out, "Output path");
    };

    auto* estimate_cmd = app.add_subcommand("estimate", "Point estimate and confidence interval for one multi-seed model");
    add_data(estimate_cmd, true);
    add_bootstrap(estimate_cmd);
    estimate_cmd->add_option("--format", config.format, "json | csv-summary")->check(CLI::IsMember({"json", "csv-summary"}));
    estimate_cmd->add_option("--histogram-out", config.histogram_out, "Histogram CSV path");

    auto* compare_cmd = app.add_subcommand("compare", "Test H0: delta <= 0 between two procedures or against a fixed baseline");
    add_data(compare_cmd, true);
    compare_cmd->add_option("--predictions-b", config.predictions_b, "Intervention predictions file")->check(CLI::ExistingFile);
    compare_cmd->add_option("--design", config.design, "paired | unpaired | baseline")->required()->check(CLI::IsMember({"paired", "unpaired", "baseline"}));
    compare_cmd->add_option("--baseline-value", config.baseline_value, "Fixed baseline performance");
    add_bootstrap(compare_cmd);
    compare_cmd->add_option("--format", config.format, "json | csv-summary")->check(CLI::IsMember({"json", "csv-summary"}));
    compare_cmd->add_option("--histogram-out", config.histogram_out, "Histogram CSV path");

    auto* agreement_cmd = app.add_subcommand("agreement", "Same-seed vs. different-seed per-example agreement");
    add_data(agreement_cmd, true);
    agreement_cmd->add_flag("--regression", config.regression, "Use Pearson correlation instead of exact-match rate");
    agreement_cmd->add_option("--out", config.out, "Output path");

    auto* validate_cmd = app.add_subcommand("validate", "Calibration studies on a synthetic scenario");
    validate_cmd->add_option("--scenario", config.scenario, "Scenario file (key = value)")->required()->check(CLI::ExistingFile);
    validate_cmd->add_option("--study", config.study, "coverage | oracle | efficiency | all (overrides the file)")->check(CLI::IsMember({"coverage", "oracle", "efficiency", "all"}));
    validate_cmd->add_option("--design", config.design, "paired | unpaired | baseline (default: single)")->check(CLI::IsMember({"paired", "unpaired", "baseline"}));
    validate_cmd->add_option("--baseline-value", config.baseline_value, "Fixed baseline performance");
    add_bootstrap(validate_cmd);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return exit_ok;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return exit_input;
    }

    try {
        if (estimate_cmd->parsed()) return cmd_estimate(config, out, err);
        if (compare_cmd->parsed()) return cmd_compare(config, out, err);
        if (agreement_cmd->parsed()) return cmd_agreement(config, out, err);
        return cmd_validate(config, out, err);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return is_statistical(e.kind()) ? exit_statistical : exit_input;
    }
}

} // namespace multiboot::cli

#endif
