#ifndef MULTIBOOT_ANALYSIS_HPP
#define MULTIBOOT_ANALYSIS_HPP

#include <optional>
#include <utility>

#include "engine.hpp"
#include "inference.hpp"
#include "model.hpp"

/**
 * @file analysis.hpp
 *
 * End-to-end entry points: run the bootstrap for a design, attach the
 * percentile interval and p-value, and build the report.
 */

namespace multiboot {

namespace detail {

inline void finish(BootstrapResult& result, const DesignSpec& design) {
    Interval ci = percentile_ci(result.samples, design.ci_level);
    result.ci_lower = ci.lower;
    result.ci_upper = ci.upper;
}

} // namespace detail

/// Single design: θ̂ with its θ̂* draws.
inline BootstrapResult estimate(const PredictionSet& preds, const MetricSpec& metric, const DesignSpec& design, std::size_t threads = 0) {
    BootstrapResult result;
    result.samples = multibootstrap(preds, metric, design, threads);
    result.point_estimate = point_estimate(preds, metric);
    detail::finish(result, design);
    return result;
}

inline BootstrapResult compare_paired(const PairedView& pair, const MetricSpec& metric, const DesignSpec& design, std::size_t threads = 0) {
    auto draws = paired_bootstrap(pair, metric, design, threads);
    ArmResult base{point_estimate(pair.base(), metric), std::move(draws.base)};
    ArmResult intervention{point_estimate(pair.intervention(), metric), std::move(draws.intervention)};

    BootstrapResult result;
    result.point_estimate = intervention.point_estimate - base.point_estimate;
    result.samples = std::move(draws.delta);
    result.p_value = p_value_leq_zero(result.samples);
    result.per_arm.emplace(std::move(base), std::move(intervention));
    detail::finish(result, design);
    return result;
}

inline BootstrapResult compare_unpaired(const PredictionSet& base_set,
                                        const PredictionSet& intervention_set,
                                        const MetricSpec& metric,
                                        const DesignSpec& design,
                                        std::size_t threads = 0) {
    auto draws = unpaired_bootstrap(base_set, intervention_set, metric, design, threads);
    ArmResult base{point_estimate(base_set, metric), std::move(draws.base)};
    ArmResult intervention{point_estimate(intervention_set, metric), std::move(draws.intervention)};

    BootstrapResult result;
    result.point_estimate = intervention.point_estimate - base.point_estimate;
    result.samples = std::move(draws.delta);
    result.p_value = p_value_leq_zero(result.samples);
    result.per_arm.emplace(std::move(base), std::move(intervention));
    detail::finish(result, design);
    return result;
}

/**
 * Fixed-baseline design: only the multi-seed model is resampled. Samples are
 * θ̂* − baseline; the p-value is the fraction of θ̂* at or below the baseline.
 */
inline BootstrapResult compare_to_baseline(const PredictionSet& preds, const MetricSpec& metric, const DesignSpec& design, std::size_t threads = 0) {
    if (design.design != Design::fixed_baseline) {
        throw Error(ErrorKind::InvalidArgument, "compare_to_baseline needs the fixed-baseline design");
    }
    design.validate();
    const double baseline = *design.baseline_value;
    ArmResult model{point_estimate(preds, metric), multibootstrap(preds, metric, design, threads)};

    BootstrapResult result;
    result.point_estimate = model.point_estimate - baseline;
    result.samples.reserve(model.samples.size());
    for (double v : model.samples) {
        result.samples.push_back(v - baseline);
    }
    result.p_value = baseline_comparison(model.samples, baseline).p_value;
    result.per_arm.emplace(ArmResult{baseline, {}}, std::move(model));
    detail::finish(result, design);
    return result;
}

inline ComparisonReport make_report(const BootstrapResult& result, const DesignSpec& design, const MetricSpec& metric) {
    return summarize(result.point_estimate, result.samples, design, metric, result.per_arm);
}

} // namespace multiboot

#endif
