#ifndef MULTIBOOT_SIMULATE_HPP
#define MULTIBOOT_SIMULATE_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "analysis.hpp"
#include "engine.hpp"
#include "errors.hpp"
#include "inference.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "rng.hpp"

/**
 * @file simulate.hpp
 *
 * Synthetic ground truth and calibration studies for the resampling
 * procedure, plus an exact enumeration oracle for tiny instances.
 *
 * The synthetic law is additive Gaussian: the score of run t of seed s on
 * example i is
 *
 *     true_theta (+ true_delta for the intervention arm)
 *       + seed_effect[s] + example_effect[i] + noise[i, s, t]
 *
 * with zero-mean components. Example effects are shared by both arms (one
 * test set); the arms' seed effects have correlation `arm_correlation`.
 */

namespace multiboot {

struct SyntheticScenario {
    double true_theta = 0.5;
    double true_delta = 0.0;
    double seed_effect_sd = 0.0;
    double example_effect_sd = 0.0;
    double noise_sd = 0.0;
    double arm_correlation = 0.0;
    std::size_t n_x = 100;
    std::size_t n_s = 5;
    std::size_t n_finetune = 1;

    void validate() const {
        if (seed_effect_sd < 0 || example_effect_sd < 0 || noise_sd < 0) {
            throw Error(ErrorKind::InvalidArgument, "scenario standard deviations must be non-negative");
        }
        if (!(arm_correlation >= -1.0 && arm_correlation <= 1.0)) {
            throw Error(ErrorKind::InvalidArgument, "arm_correlation must lie in [-1, 1]");
        }
        if (n_x < 1 || n_s < 1 || n_finetune < 1) {
            throw Error(ErrorKind::InvalidArgument, "n_x, n_s and n_finetune must be positive");
        }
        if (!std::isfinite(true_theta) || !std::isfinite(true_delta)) {
            throw Error(ErrorKind::NonFiniteValue, "true_theta and true_delta must be finite");
        }
    }
};

namespace detail {

inline std::vector<std::string> numbered_ids(std::string_view prefix, std::size_t n) {
    std::vector<std::string> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(std::string(prefix) + std::to_string(i));
    }
    return out;
}

inline PredictionSet assemble_arm(const SyntheticScenario& sc,
                                  double mean,
                                  std::span<const double> seed_effects,
                                  std::span<const double> example_effects,
                                  RngStream& rng) {
    std::vector<RunKey> runs;
    runs.reserve(sc.n_s * sc.n_finetune);
    std::vector<double> values;
    values.reserve(sc.n_x * sc.n_s * sc.n_finetune);
    for (std::size_t s = 0; s < sc.n_s; ++s) {
        for (std::size_t t = 0; t < sc.n_finetune; ++t) {
            runs.push_back(RunKey{std::to_string(s), std::to_string(t)});
            for (std::size_t i = 0; i < sc.n_x; ++i) {
                double noise = sc.noise_sd > 0 ? rng.normal(0.0, sc.noise_sd) : 0.0;
                values.push_back(mean + seed_effects[s] + example_effects[i] + noise);
            }
        }
    }
    return PredictionSet(numbered_ids("x", sc.n_x), std::vector<double>(sc.n_x, 0.0), std::nullopt, std::move(runs), std::move(values));
}

inline std::vector<double> normals(std::size_t n, double sd, RngStream& rng) {
    std::vector<double> out(n, 0.0);
    if (sd > 0) {
        for (auto& o : out) {
            o = rng.normal(0.0, sd);
        }
    }
    return out;
}

} // namespace detail

/// One synthetic multi-seed model, scored for the mean-of-scores metric.
inline PredictionSet generate(const SyntheticScenario& scenario, RngStream& rng) {
    scenario.validate();
    auto seed_effects = detail::normals(scenario.n_s, scenario.seed_effect_sd, rng);
    auto example_effects = detail::normals(scenario.n_x, scenario.example_effect_sd, rng);
    return detail::assemble_arm(scenario, scenario.true_theta, seed_effects, example_effects, rng);
}

/// (base, intervention) arms on the same examples and seed identifiers.
inline std::pair<PredictionSet, PredictionSet> generate_pair(const SyntheticScenario& scenario, RngStream& rng) {
    scenario.validate();
    const double rho = scenario.arm_correlation;
    const double orth = std::sqrt(std::max(0.0, 1.0 - rho * rho));
    std::vector<double> base_seed(scenario.n_s), other_seed(scenario.n_s);
    for (std::size_t s = 0; s < scenario.n_s; ++s) {
        double z1 = rng.normal(), z2 = rng.normal();
        base_seed[s] = scenario.seed_effect_sd * z1;
        other_seed[s] = scenario.seed_effect_sd * (rho * z1 + orth * z2);
    }
    auto example_effects = detail::normals(scenario.n_x, scenario.example_effect_sd, rng);
    auto base = detail::assemble_arm(scenario, scenario.true_theta, base_seed, example_effects, rng);
    auto other = detail::assemble_arm(scenario, scenario.true_theta + scenario.true_delta, other_seed, example_effects, rng);
    return {std::move(base), std::move(other)};
}

struct CalibrationResult {
    double nominal_level = 0;
    double empirical_coverage = 0;
    std::size_t n_replications = 0;
    double mc_stderr = 0;
    /// RMS bootstrap SD of the estimate ÷ SD of the estimate across replications.
    double variance_ratio = 0;
    double truth = 0;
    double mean_point_estimate = 0;
    double sampling_sd = 0;
    double mean_bootstrap_sd = 0;
    /// Share of replications with p ≤ alpha (comparison designs only).
    std::optional<double> rejection_rate;
    double alpha = 0.05;
};

namespace detail {

enum : std::uint64_t { data_domain = 1, bootstrap_domain = 2 };

inline double sample_variance(std::span<const double> x) {
    if (x.size() < 2) {
        return 0;
    }
    double m = mean(x), ss = 0;
    for (double v : x) {
        ss += (v - m) * (v - m);
    }
    return ss / static_cast<double>(x.size() - 1);
}

} // namespace detail

/**
 * Repeat (generate, bootstrap) `n_replications` times and measure how often
 * the nominal-level interval covers the true parameter: `true_theta` for the
 * single design, `true_delta` for paired/unpaired, and
 * `true_theta - baseline` for the fixed-baseline design.
 */
inline CalibrationResult coverage_study(const SyntheticScenario& scenario,
                                        const DesignSpec& design,
                                        std::size_t n_replications,
                                        double alpha = 0.05,
                                        std::size_t threads = 0) {
    scenario.validate();
    design.validate();
    if (n_replications < 50) {
        throw Error(ErrorKind::InvalidArgument, "coverage_study needs at least 50 replications");
    }
    const MetricSpec metric{MetricKind::mean_of_scores};

    double truth = scenario.true_theta;
    if (design.design == Design::paired || design.design == Design::unpaired) {
        truth = scenario.true_delta;
    } else if (design.design == Design::fixed_baseline) {
        truth = scenario.true_theta - *design.baseline_value;
    }

    std::vector<double> points(n_replications), boot_vars(n_replications);
    std::vector<char> covered(n_replications), rejected(n_replications);

    parallel_for(n_replications, threads, [&](std::size_t r) {
        RngStream data_rng(derive_seed(design.master_seed, detail::data_domain, r), 0);
        DesignSpec rep = design;
        rep.master_seed = derive_seed(design.master_seed, detail::bootstrap_domain, r);

        BootstrapResult result;
        switch (design.design) {
            case Design::single:
                result = estimate(generate(scenario, data_rng), metric, rep, 1);
                break;
            case Design::fixed_baseline:
                result = compare_to_baseline(generate(scenario, data_rng), metric, rep, 1);
                break;
            case Design::paired: {
                auto arms = generate_pair(scenario, data_rng);
                result = compare_paired(align_paired(arms.first, arms.second), metric, rep, 1);
                break;
            }
            case Design::unpaired: {
                auto arms = generate_pair(scenario, data_rng);
                result = compare_unpaired(arms.first, arms.second, metric, rep, 1);
                break;
            }
        }
        points[r] = result.point_estimate;
        boot_vars[r] = detail::sample_variance(result.samples);
        covered[r] = (result.ci_lower <= truth && truth <= result.ci_upper);
        rejected[r] = (result.p_value && *result.p_value <= alpha);
    });

    CalibrationResult out;
    out.nominal_level = design.ci_level;
    out.n_replications = n_replications;
    out.truth = truth;
    out.alpha = alpha;
    const double n = static_cast<double>(n_replications);

    std::size_t hits = 0, rejections = 0;
    double var_total = 0;
    for (std::size_t r = 0; r < n_replications; ++r) {
        hits += covered[r];
        rejections += rejected[r];
        var_total += boot_vars[r];
    }
    out.empirical_coverage = static_cast<double>(hits) / n;
    out.mc_stderr = std::sqrt(out.empirical_coverage * (1.0 - out.empirical_coverage) / n);
    out.mean_point_estimate = detail::mean(points);
    out.sampling_sd = std::sqrt(detail::sample_variance(points));
    out.mean_bootstrap_sd = std::sqrt(var_total / n);
    if (out.sampling_sd > 0) {
        out.variance_ratio = out.mean_bootstrap_sd / out.sampling_sd;
    } else {
        out.variance_ratio = (out.mean_bootstrap_sd == 0 ? 1.0 : std::numeric_limits<double>::infinity());
    }
    if (design.tests_hypothesis()) {
        out.rejection_rate = static_cast<double>(rejections) / n;
    }
    return out;
}

struct EfficiencyResult {
    std::size_t n_replications = 0;
    /// Share of replications where var(paired δ̂*) < var(unpaired δ̂*).
    double fraction_paired_smaller = 0;
    double mean_paired_variance = 0;
    double mean_unpaired_variance = 0;
};

/// Paired vs. unpaired δ̂* variance on the same two-arm data, replication by replication.
inline EfficiencyResult efficiency_study(const SyntheticScenario& scenario,
                                         std::size_t n_replications,
                                         std::size_t nboot,
                                         std::uint64_t master_seed,
                                         std::size_t threads = 0) {
    scenario.validate();
    if (n_replications < 1) {
        throw Error(ErrorKind::InvalidArgument, "efficiency_study needs at least one replication");
    }
    const MetricSpec metric{MetricKind::mean_of_scores};
    std::vector<double> paired_var(n_replications), unpaired_var(n_replications);

    parallel_for(n_replications, threads, [&](std::size_t r) {
        RngStream data_rng(derive_seed(master_seed, detail::data_domain, r), 0);
        auto arms = generate_pair(scenario, data_rng);
        DesignSpec design;
        design.nboot = nboot;
        design.master_seed = derive_seed(master_seed, detail::bootstrap_domain, r);

        design.design = Design::paired;
        auto paired = paired_bootstrap(align_paired(arms.first, arms.second), metric, design, 1);
        design.design = Design::unpaired;
        auto unpaired = unpaired_bootstrap(arms.first, arms.second, metric, design, 1);
        paired_var[r] = detail::sample_variance(paired.delta);
        unpaired_var[r] = detail::sample_variance(unpaired.delta);
    });

    EfficiencyResult out;
    out.n_replications = n_replications;
    std::size_t smaller = 0;
    for (std::size_t r = 0; r < n_replications; ++r) {
        smaller += (paired_var[r] < unpaired_var[r]);
    }
    out.fraction_paired_smaller = static_cast<double>(smaller) / static_cast<double>(n_replications);
    out.mean_paired_variance = detail::mean(paired_var);
    out.mean_unpaired_variance = detail::mean(unpaired_var);
    return out;
}

/*************************
 ******** Oracle *********
 *************************/

struct OracleMoments {
    double exact_mean = 0;
    double exact_variance = 0;
    std::size_t n_outcomes = 0;
};

inline constexpr double oracle_outcome_limit = 1e7;

/**
 * Exact mean and variance of θ̂* under joint resampling of examples and
 * seeds, by enumerating all n_x^n_x · n_s^n_s equally likely ordered draws.
 * Uses the general per-run metric path, not the engine's linear shortcut.
 */
inline OracleMoments exhaustive_oracle(const PredictionSet& preds, const MetricSpec& metric) {
    const std::size_t n_x = preds.n_examples(), n_s = preds.n_seeds();
    const double example_outcomes = std::pow(static_cast<double>(n_x), static_cast<double>(n_x));
    const double seed_outcomes = std::pow(static_cast<double>(n_s), static_cast<double>(n_s));
    if (example_outcomes * seed_outcomes > oracle_outcome_limit) {
        throw Error(ErrorKind::InstanceTooLarge,
                    "exhaustive enumeration needs n_x^n_x * n_s^n_s <= 1e7 (n_x = " + std::to_string(n_x) +
                        ", n_s = " + std::to_string(n_s) + ")");
    }
    check_metric_compatible(preds, metric);

    // Visits every ordered index sequence of length n over [0, n).
    auto for_each_sequence = [](std::size_t n, auto&& visit) {
        std::vector<std::size_t> seq(n, 0);
        for (;;) {
            visit(seq);
            std::size_t pos = 0;
            while (pos < n && ++seq[pos] == n) {
                seq[pos] = 0;
                ++pos;
            }
            if (pos == n) {
                return;
            }
        }
    };

    auto for_each_theta = [&](auto&& visit) {
        for_each_sequence(n_x, [&](const std::vector<std::size_t>& examples) {
            auto values = per_seed_values(preds, metric, examples);
            for_each_sequence(n_s, [&](const std::vector<std::size_t>& seeds) {
                double total = 0;
                for (auto s : seeds) {
                    total += values[s].second;
                }
                visit(total / static_cast<double>(n_s));
            });
        });
    };

    OracleMoments out;
    long double sum = 0;
    for_each_theta([&](double theta) {
        sum += theta;
        ++out.n_outcomes;
    });
    const long double mean = sum / static_cast<long double>(out.n_outcomes);
    long double ss = 0;
    for_each_theta([&](double theta) {
        long double d = theta - mean;
        ss += d * d;
    });
    out.exact_mean = static_cast<double>(mean);
    out.exact_variance = static_cast<double>(ss / static_cast<long double>(out.n_outcomes));
    return out;
}

struct OracleCheck {
    OracleMoments exact;
    double mc_mean = 0;
    double mc_variance = 0;
    double mean_stderr = 0;
    double variance_stderr = 0;
    /// Monte-Carlo minus exact, in standard errors (0 when both are exact).
    double mean_z = 0;
    double variance_z = 0;
};

namespace detail {

inline double z_score(double diff, double se) {
    if (se > 0) {
        return diff / se;
    }
    return std::abs(diff) < 1e-12 ? 0.0 : std::numeric_limits<double>::infinity();
}

} // namespace detail

/**
 * Compare the engine's Monte-Carlo moments of θ̂* (single design, both
 * axes) with the exact enumeration. The variance standard error uses the
 * sample fourth central moment: se² ≈ (m4 − s⁴) / N.
 */
inline OracleCheck compare_with_oracle(const PredictionSet& preds,
                                       const MetricSpec& metric,
                                       std::size_t nboot,
                                       std::uint64_t master_seed,
                                       std::size_t threads = 0) {
    OracleCheck out;
    out.exact = exhaustive_oracle(preds, metric);

    DesignSpec design;
    design.nboot = nboot;
    design.master_seed = master_seed;
    auto samples = multibootstrap(preds, metric, design, threads);

    const double n = static_cast<double>(samples.size());
    out.mc_mean = detail::mean(samples);
    double m2 = 0, m4 = 0;
    for (double v : samples) {
        double d = v - out.mc_mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m4 /= n;
    out.mc_variance = detail::sample_variance(samples);
    out.mean_stderr = std::sqrt(out.mc_variance / n);
    out.variance_stderr = std::sqrt(std::max(0.0, m4 - m2 * m2) / n);
    out.mean_z = detail::z_score(out.mc_mean - out.exact.exact_mean, out.mean_stderr);
    out.variance_z = detail::z_score(out.mc_variance - out.exact.exact_variance, out.variance_stderr);
    return out;
}

/*************************
 **** Scenario files *****
 *************************/

enum class StudyKind { coverage, oracle, efficiency, all };

struct ScenarioFile {
    SyntheticScenario scenario;
    StudyKind study = StudyKind::coverage;
    std::size_t replications = 300;
    double alpha = 0.05;
};

/**
 * Parse a flat `key = value` scenario file. Blank lines and lines starting
 * with `#` are ignored. Keys mirror `SyntheticScenario` fields plus
 * `study` (coverage | oracle | efficiency | all), `replications` and `alpha`.
 */
inline ScenarioFile parse_scenario(std::istream& input) {
    ScenarioFile out;
    std::string line;
    std::size_t line_no = 0;

    auto trim = [](std::string s) {
        const char* ws = " \t\r";
        auto b = s.find_first_not_of(ws);
        if (b == std::string::npos) {
            return std::string();
        }
        auto e = s.find_last_not_of(ws);
        return s.substr(b, e - b + 1);
    };

    while (std::getline(input, line)) {
        ++line_no;
        auto where = "line " + std::to_string(line_no);
        line = trim(line);
        if (line.empty() || line[0] == '#') {
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::ParseError, where + ": expected 'key = value'", std::to_string(line_no));
        }
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));

        auto as_real = [&]() {
            std::size_t used = 0;
            double v = 0;
            try {
                v = std::stod(value, &used);
            } catch (...) {
                used = 0;
            }
            if (used == 0 || used != value.size() || !std::isfinite(v)) {
                throw Error(ErrorKind::ParseError, where + ": '" + key + "' needs a finite number", std::to_string(line_no));
            }
            return v;
        };
        auto as_count = [&]() {
            auto v = detail::as_integer(value);
            if (!v || *v < 1) {
                throw Error(ErrorKind::ParseError, where + ": '" + key + "' needs a positive integer", std::to_string(line_no));
            }
            return static_cast<std::size_t>(*v);
        };

        auto& sc = out.scenario;
        if (key == "true_theta") sc.true_theta = as_real();
        else if (key == "true_delta") sc.true_delta = as_real();
        else if (key == "seed_effect_sd") sc.seed_effect_sd = as_real();
        else if (key == "example_effect_sd") sc.example_effect_sd = as_real();
        else if (key == "noise_sd") sc.noise_sd = as_real();
        else if (key == "arm_correlation") sc.arm_correlation = as_real();
        else if (key == "n_x") sc.n_x = as_count();
        else if (key == "n_s") sc.n_s = as_count();
        else if (key == "n_finetune") sc.n_finetune = as_count();
        else if (key == "replications") out.replications = as_count();
        else if (key == "alpha") out.alpha = as_real();
        else if (key == "study") {
            if (value == "coverage") out.study = StudyKind::coverage;
            else if (value == "oracle") out.study = StudyKind::oracle;
            else if (value == "efficiency") out.study = StudyKind::efficiency;
            else if (value == "all") out.study = StudyKind::all;
            else throw Error(ErrorKind::ParseError, where + ": unknown study '" + value + "'", std::to_string(line_no));
        } else {
            throw Error(ErrorKind::ParseError, where + ": unknown key '" + key + "'", std::to_string(line_no));
        }
    }
    try {
        out.scenario.validate();
    } catch (const Error& e) {
        throw Error(ErrorKind::ParseError, std::string("invalid scenario: ") + e.what());
    }
    return out;
}

} // namespace multiboot

#endif
