#ifndef MULTIBOOT_ENGINE_HPP
#define MULTIBOOT_ENGINE_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "errors.hpp"
#include "metrics.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "rng.hpp"

/**
 * @file engine.hpp
 *
 * Joint resampling over pretraining seeds and test examples.
 *
 * Every bootstrap iteration `b` draws from its own `RngStream(master_seed, b)`
 * so iterations can run in any order or concurrently and still produce the
 * same sample vector. Within an iteration the draw order is fixed: example
 * indices first, then seed indices (then the second arm's seed indices for
 * unpaired comparisons).
 */

namespace multiboot {

struct ResampleIndices {
    std::vector<std::size_t> example_indices;
    std::vector<std::size_t> seed_indices;
    /// Second arm's seed draw; only filled for unpaired comparisons.
    std::vector<std::size_t> second_seed_indices;
};

inline std::vector<std::size_t> draw_with_replacement(std::size_t n, RngStream& rng) {
    std::vector<std::size_t> out(n);
    for (auto& o : out) {
        o = static_cast<std::size_t>(rng.uniform_index(n));
    }
    return out;
}

inline ResampleIndices draw_resample(std::size_t n_x, std::size_t n_s, Axis axis, RngStream& rng) {
    if (n_x < 1 || n_s < 1) {
        throw Error(ErrorKind::InvalidArgument, "draw_resample needs n_x >= 1 and n_s >= 1");
    }
    ResampleIndices out;
    out.example_indices = (axis == Axis::seeds_only ? identity_indices(n_x) : draw_with_replacement(n_x, rng));
    out.seed_indices = (axis == Axis::examples_only ? identity_indices(n_s) : draw_with_replacement(n_s, rng));
    return out;
}

/**
 * Block resample of example groups: draws G groups with replacement and
 * concatenates their member indices. The result's length varies with the
 * sizes of the drawn groups.
 */
inline std::vector<std::size_t> grouped_example_indices(const PredictionSet& preds, RngStream& rng) {
    if (!preds.has_groups()) {
        throw Error(ErrorKind::NoGroups, "grouped resampling requested but the prediction set has no group ids");
    }
    const auto& groups = preds.group_members();
    std::vector<std::size_t> out;
    out.reserve(preds.n_examples());
    for (std::size_t g = 0; g < groups.size(); ++g) {
        const auto& members = groups[rng.uniform_index(groups.size())];
        out.insert(out.end(), members.begin(), members.end());
    }
    return out;
}

/// θ̂: mean over pretraining seeds of each seed's (run-averaged) performance.
inline double point_estimate(const PredictionSet& preds, const MetricSpec& metric) {
    auto ident = identity_indices(preds.n_examples());
    auto values = per_seed_values(preds, metric, ident);
    double total = 0;
    for (const auto& v : values) {
        total += v.second;
    }
    return total / static_cast<double>(values.size());
}

namespace detail {

/**
 * Computes θ̂* for one arm given resampled example and seed indices.
 *
 * Per-example metrics are linear in the example weights, so the
 * run-averaged per-example scores are folded into an n_x × n_s matrix once
 * and each draw reduces to Σ_i w_i Σ_j c_j score(i, j) with multiplicities
 * w (examples) and c (seeds). Other metrics evaluate each distinct drawn
 * seed on the gathered rows.
 */
class ArmEvaluator {
public:
    ArmEvaluator(const PredictionSet& preds, const MetricSpec& metric) : preds_(preds), metric_(metric) {
        if (!is_per_example(metric.kind)) {
            return;
        }
        const std::size_t n_x = preds.n_examples(), n_s = preds.n_seeds();
        auto labels = preds.labels();
        scores_.assign(n_x * n_s, 0.0);
        for (std::size_t s = 0; s < n_s; ++s) {
            const double inv_runs = 1.0 / static_cast<double>(preds.runs_in_seed(s));
            for (std::size_t r = preds.seed_begin(s); r < preds.seed_end(s); ++r) {
                auto col = preds.column(r);
                for (std::size_t i = 0; i < n_x; ++i) {
                    double score = (metric.kind == MetricKind::accuracy ? (col[i] == labels[i] ? 1.0 : 0.0) : col[i]);
                    scores_[i * n_s + s] += score;
                }
            }
            for (std::size_t i = 0; i < n_x; ++i) {
                scores_[i * n_s + s] *= inv_runs;
            }
        }
    }

    std::size_t n_seeds() const { return preds_.n_seeds(); }
    std::size_t n_examples() const { return preds_.n_examples(); }

    double theta(std::span<const std::size_t> example_indices, std::span<const std::size_t> seed_indices) const {
        if (!scores_.empty()) {
            return linear_theta(example_indices, seed_indices);
        }
        return general_theta(example_indices, seed_indices);
    }

private:
    double linear_theta(std::span<const std::size_t> example_indices, std::span<const std::size_t> seed_indices) const {
        const std::size_t n_x = preds_.n_examples(), n_s = preds_.n_seeds();
        std::vector<double> seed_counts(n_s, 0.0);
        for (auto s : seed_indices) {
            seed_counts[s] += 1.0;
        }
        std::vector<std::uint32_t> example_counts(n_x, 0);
        for (auto i : example_indices) {
            ++example_counts[i];
        }

        double total = 0;
        for (std::size_t i = 0; i < n_x; ++i) {
            if (!example_counts[i]) {
                continue;
            }
            const double* row = scores_.data() + i * n_s;
            double dot = 0;
            for (std::size_t s = 0; s < n_s; ++s) {
                dot += row[s] * seed_counts[s];
            }
            total += static_cast<double>(example_counts[i]) * dot;
        }
        return total / (static_cast<double>(example_indices.size()) * static_cast<double>(seed_indices.size()));
    }

    double general_theta(std::span<const std::size_t> example_indices, std::span<const std::size_t> seed_indices) const {
        std::vector<double> cache(preds_.n_seeds(), 0.0);
        std::vector<char> known(preds_.n_seeds(), 0);
        GatherBuffers buffers;
        double total = 0;
        for (auto s : seed_indices) {
            if (!known[s]) {
                cache[s] = seed_value(preds_, metric_, s, example_indices, buffers);
                known[s] = 1;
            }
            total += cache[s];
        }
        return total / static_cast<double>(seed_indices.size());
    }

    const PredictionSet& preds_;
    MetricSpec metric_;
    std::vector<double> scores_;
};

inline std::vector<std::size_t> draw_examples(const PredictionSet& preds, const DesignSpec& design, RngStream& rng) {
    if (design.axis == Axis::seeds_only) {
        return identity_indices(preds.n_examples());
    }
    if (design.grouped) {
        return grouped_example_indices(preds, rng);
    }
    return draw_with_replacement(preds.n_examples(), rng);
}

inline std::vector<std::size_t> draw_seeds(std::size_t n_s, const DesignSpec& design, RngStream& rng) {
    if (design.axis == Axis::examples_only) {
        return identity_indices(n_s);
    }
    return draw_with_replacement(n_s, rng);
}

inline void check_inputs(const PredictionSet& preds, const MetricSpec& metric, const DesignSpec& design) {
    design.validate();
    check_metric_compatible(preds, metric);
    if (design.grouped && design.axis != Axis::seeds_only && !preds.has_groups()) {
        throw Error(ErrorKind::NoGroups, "grouped resampling requested but the prediction set has no group ids");
    }
}

/// Runs `body(b)` for every iteration, prefixing metric failures with the iteration number.
template<class Body>
void run_iterations(std::size_t nboot, std::size_t threads, Body body) {
    parallel_for(nboot, threads, [&](std::size_t b) {
        try {
            body(b);
        } catch (const Error& e) {
            throw Error(e.kind(), "bootstrap iteration " + std::to_string(b) + " aborted: " + e.what(), std::to_string(b));
        }
    });
}

} // namespace detail

/**
 * θ̂* draws for one multi-seed model. Used by the single and fixed-baseline
 * designs. `threads` = 0 picks `default_threads()`; output does not depend
 * on it.
 */
inline std::vector<double> multibootstrap(const PredictionSet& preds,
                                          const MetricSpec& metric,
                                          const DesignSpec& design,
                                          std::size_t threads = 0) {
    if (design.design != Design::single && design.design != Design::fixed_baseline) {
        throw Error(ErrorKind::InvalidArgument, "multibootstrap handles the single and fixed-baseline designs");
    }
    detail::check_inputs(preds, metric, design);
    detail::ArmEvaluator arm(preds, metric);

    std::vector<double> samples(design.nboot);
    detail::run_iterations(design.nboot, threads, [&](std::size_t b) {
        RngStream rng(design.master_seed, b);
        auto examples = detail::draw_examples(preds, design, rng);
        auto seeds = detail::draw_seeds(preds.n_seeds(), design, rng);
        samples[b] = arm.theta(examples, seeds);
    });
    return samples;
}

struct ComparisonSamples {
    /// δ̂*_b = θ̂*_{intervention,b} − θ̂*_{base,b}.
    std::vector<double> delta;
    std::vector<double> base;
    std::vector<double> intervention;
};

/// Paired design: both arms share every example and seed draw.
inline ComparisonSamples paired_bootstrap(const PairedView& pair,
                                          const MetricSpec& metric,
                                          const DesignSpec& design,
                                          std::size_t threads = 0) {
    if (design.design != Design::paired) {
        throw Error(ErrorKind::InvalidArgument, "paired_bootstrap needs the paired design");
    }
    detail::check_inputs(pair.base(), metric, design);
    detail::ArmEvaluator base(pair.base(), metric);
    detail::ArmEvaluator intervention(pair.intervention(), metric);

    ComparisonSamples out{std::vector<double>(design.nboot), std::vector<double>(design.nboot), std::vector<double>(design.nboot)};
    detail::run_iterations(design.nboot, threads, [&](std::size_t b) {
        RngStream rng(design.master_seed, b);
        auto examples = detail::draw_examples(pair.base(), design, rng);
        auto seeds = detail::draw_seeds(pair.base().n_seeds(), design, rng);
        out.base[b] = base.theta(examples, seeds);
        out.intervention[b] = intervention.theta(examples, seeds);
        out.delta[b] = out.intervention[b] - out.base[b];
    });
    return out;
}

/**
 * Unpaired design: one shared example draw, independent seed draws per arm
 * (each sized to that arm's own seed count).
 */
inline ComparisonSamples unpaired_bootstrap(const PredictionSet& base_set,
                                            const PredictionSet& intervention_set,
                                            const MetricSpec& metric,
                                            const DesignSpec& design,
                                            std::size_t threads = 0) {
    if (design.design != Design::unpaired) {
        throw Error(ErrorKind::InvalidArgument, "unpaired_bootstrap needs the unpaired design");
    }
    PredictionSet aligned = align_examples(base_set, intervention_set);
    detail::check_inputs(base_set, metric, design);
    detail::ArmEvaluator base(base_set, metric);
    detail::ArmEvaluator intervention(aligned, metric);

    ComparisonSamples out{std::vector<double>(design.nboot), std::vector<double>(design.nboot), std::vector<double>(design.nboot)};
    detail::run_iterations(design.nboot, threads, [&](std::size_t b) {
        RngStream rng(design.master_seed, b);
        auto examples = detail::draw_examples(base_set, design, rng);
        auto base_seeds = detail::draw_seeds(base_set.n_seeds(), design, rng);
        auto other_seeds = detail::draw_seeds(aligned.n_seeds(), design, rng);
        out.base[b] = base.theta(examples, base_seeds);
        out.intervention[b] = intervention.theta(examples, other_seeds);
        out.delta[b] = out.intervention[b] - out.base[b];
    });
    return out;
}

} // namespace multiboot

#endif
