#ifndef MULTIBOOT_MODEL_HPP
#define MULTIBOOT_MODEL_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "errors.hpp"

/**
 * @file model.hpp
 *
 * Immutable containers for evaluation-set predictions and the analysis
 * configuration. A `PredictionSet` holds one value per (example, run) cell,
 * where runs are nested as fine-tuning runs inside pretraining seeds.
 */

namespace multiboot {

namespace detail {

inline std::optional<long long> as_integer(std::string_view s) {
    long long out = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty()) {
        return std::nullopt;
    }
    return out;
}

} // namespace detail

/// Identifier ordering used for seeds and runs: numeric when both sides are
/// integers, lexicographic otherwise (integers sort before other strings).
inline bool natural_less(std::string_view a, std::string_view b) {
    auto ia = detail::as_integer(a);
    auto ib = detail::as_integer(b);
    if (ia && ib) {
        if (*ia != *ib) {
            return *ia < *ib;
        }
        return a < b;
    }
    if (ia.has_value() != ib.has_value()) {
        return ia.has_value();
    }
    return a < b;
}

struct RunKey {
    std::string pretrain_seed;
    std::string finetune_run;

    friend bool operator==(const RunKey&, const RunKey&) = default;
};

inline bool natural_less(const RunKey& a, const RunKey& b) {
    if (a.pretrain_seed != b.pretrain_seed) {
        return natural_less(a.pretrain_seed, b.pretrain_seed);
    }
    return natural_less(a.finetune_run, b.finetune_run);
}

/**
 * Dense example × run matrix of predictions (or precomputed per-example
 * scores), with per-example labels and optional group identifiers.
 *
 * Runs must be contiguous per pretraining seed; each seed owns the run
 * range `[seed_begin(j), seed_end(j))`. Values are stored column-major so a
 * run's predictions form one contiguous span.
 */
class PredictionSet {
public:
    PredictionSet(std::vector<std::string> example_ids,
                  std::vector<double> labels,
                  std::optional<std::vector<std::string>> group_ids,
                  std::vector<RunKey> runs,
                  std::vector<double> values_column_major)
        : example_ids_(std::move(example_ids)),
          labels_(std::move(labels)),
          group_ids_(std::move(group_ids)),
          runs_(std::move(runs)),
          values_(std::move(values_column_major)) {
        validate();
        index_seeds();
        index_groups();
    }

    std::size_t n_examples() const noexcept { return example_ids_.size(); }
    std::size_t n_runs() const noexcept { return runs_.size(); }
    std::size_t n_seeds() const noexcept { return seed_ids_.size(); }

    const std::vector<std::string>& example_ids() const noexcept { return example_ids_; }
    std::span<const double> labels() const noexcept { return labels_; }
    const std::optional<std::vector<std::string>>& group_ids() const noexcept { return group_ids_; }
    const std::vector<RunKey>& runs() const noexcept { return runs_; }
    const std::vector<std::string>& seed_ids() const noexcept { return seed_ids_; }

    std::size_t seed_begin(std::size_t seed) const { return seed_offsets_[seed]; }
    std::size_t seed_end(std::size_t seed) const { return seed_offsets_[seed + 1]; }
    std::size_t runs_in_seed(std::size_t seed) const { return seed_end(seed) - seed_begin(seed); }

    std::span<const double> column(std::size_t run) const {
        return std::span<const double>(values_).subspan(run * n_examples(), n_examples());
    }

    double value(std::size_t example, std::size_t run) const {
        return values_[run * n_examples() + example];
    }

    bool has_groups() const noexcept { return group_ids_.has_value(); }

    /// Example indices of each distinct group, groups in first-appearance order.
    const std::vector<std::vector<std::size_t>>& group_members() const noexcept { return group_members_; }

    friend bool operator==(const PredictionSet& a, const PredictionSet& b) {
        return a.example_ids_ == b.example_ids_ && a.labels_ == b.labels_ &&
               a.group_ids_ == b.group_ids_ && a.runs_ == b.runs_ && a.values_ == b.values_;
    }

private:
    void validate() const {
        if (example_ids_.empty()) {
            throw Error(ErrorKind::InvalidArgument, "prediction set needs at least one example");
        }
        if (runs_.empty()) {
            throw Error(ErrorKind::InvalidArgument, "prediction set needs at least one run");
        }
        if (labels_.size() != example_ids_.size()) {
            throw Error(ErrorKind::LengthMismatch, "labels must align with example ids");
        }
        if (group_ids_ && group_ids_->size() != example_ids_.size()) {
            throw Error(ErrorKind::LengthMismatch, "group ids must align with example ids");
        }
        if (values_.size() != example_ids_.size() * runs_.size()) {
            throw Error(ErrorKind::LengthMismatch, "value matrix must have n_examples * n_runs entries");
        }
        for (std::size_t i = 0; i < labels_.size(); ++i) {
            if (!std::isfinite(labels_[i])) {
                throw Error(ErrorKind::NonFiniteValue, "non-finite label for example '" + example_ids_[i] + "'", example_ids_[i]);
            }
        }
        for (std::size_t k = 0; k < values_.size(); ++k) {
            if (!std::isfinite(values_[k])) {
                const auto& ex = example_ids_[k % example_ids_.size()];
                throw Error(ErrorKind::NonFiniteValue, "non-finite value for example '" + ex + "'", ex);
            }
        }

        std::unordered_map<std::string_view, int> seen_examples;
        for (const auto& id : example_ids_) {
            if (++seen_examples[id] > 1) {
                throw Error(ErrorKind::InvalidArgument, "duplicate example id '" + id + "'", id);
            }
        }
    }

    void index_seeds() {
        seed_offsets_.push_back(0);
        std::map<std::pair<std::string, std::string>, int> seen_runs;
        std::unordered_map<std::string, int> closed_seeds;
        for (std::size_t r = 0; r < runs_.size(); ++r) {
            const auto& key = runs_[r];
            if (++seen_runs[{key.pretrain_seed, key.finetune_run}] > 1) {
                throw Error(ErrorKind::DuplicateCell,
                            "duplicate run (" + key.pretrain_seed + ", " + key.finetune_run + ")",
                            key.pretrain_seed);
            }
            if (seed_ids_.empty() || seed_ids_.back() != key.pretrain_seed) {
                if (closed_seeds.count(key.pretrain_seed)) {
                    throw Error(ErrorKind::InvalidArgument,
                                "runs of pretrain seed '" + key.pretrain_seed + "' are not contiguous",
                                key.pretrain_seed);
                }
                if (!seed_ids_.empty()) {
                    closed_seeds[seed_ids_.back()] = 1;
                    seed_offsets_.push_back(r);
                }
                seed_ids_.push_back(key.pretrain_seed);
            }
        }
        seed_offsets_.push_back(runs_.size());
    }

    void index_groups() {
        if (!group_ids_) {
            return;
        }
        std::unordered_map<std::string, std::size_t> slot;
        for (std::size_t i = 0; i < group_ids_->size(); ++i) {
            auto [it, inserted] = slot.try_emplace((*group_ids_)[i], group_members_.size());
            if (inserted) {
                group_members_.emplace_back();
            }
            group_members_[it->second].push_back(i);
        }
    }

    std::vector<std::string> example_ids_;
    std::vector<double> labels_;
    std::optional<std::vector<std::string>> group_ids_;
    std::vector<RunKey> runs_;
    std::vector<double> values_;

    std::vector<std::string> seed_ids_;
    std::vector<std::size_t> seed_offsets_;
    std::vector<std::vector<std::size_t>> group_members_;
};

enum class MetricKind { accuracy, pearson, mean_of_scores };
enum class Direction { higher_is_better, lower_is_better };

struct MetricSpec {
    MetricKind kind = MetricKind::accuracy;
    Direction direction = Direction::higher_is_better;
};

/// Metrics that are plain averages of a per-example score.
inline constexpr bool is_per_example(MetricKind kind) {
    return kind != MetricKind::pearson;
}

enum class Design { single, paired, unpaired, fixed_baseline };
enum class Axis { both, seeds_only, examples_only };

struct DesignSpec {
    Design design = Design::single;
    Axis axis = Axis::both;
    std::size_t nboot = 1000;
    double ci_level = 0.95;
    unsigned long long master_seed = 0;
    std::optional<double> baseline_value;
    /// Resample example groups as atomic blocks instead of single examples.
    bool grouped = false;

    bool tests_hypothesis() const noexcept { return design != Design::single; }

    void validate() const {
        if (nboot < 1) {
            throw Error(ErrorKind::InvalidArgument, "nboot must be at least 1");
        }
        if (!(ci_level > 0.0 && ci_level < 1.0)) {
            throw Error(ErrorKind::InvalidArgument, "ci_level must lie strictly between 0 and 1");
        }
        if ((design == Design::fixed_baseline) != baseline_value.has_value()) {
            throw Error(ErrorKind::InvalidArgument, "baseline_value is required exactly for the fixed-baseline design");
        }
        if (baseline_value && !std::isfinite(*baseline_value)) {
            throw Error(ErrorKind::NonFiniteValue, "baseline_value must be finite");
        }
    }
};

struct ArmResult {
    double point_estimate = 0;
    std::vector<double> samples;
};

struct BootstrapResult {
    double point_estimate = 0;
    std::vector<double> samples;
    double ci_lower = 0;
    double ci_upper = 0;
    std::optional<double> p_value;
    /// (base, intervention) arms for comparison designs.
    std::optional<std::pair<ArmResult, ArmResult>> per_arm;
};

inline constexpr std::string_view to_string(MetricKind kind) {
    switch (kind) {
        case MetricKind::accuracy: return "accuracy";
        case MetricKind::pearson: return "pearson";
        case MetricKind::mean_of_scores: return "mean-of-scores";
    }
    return "";
}

inline constexpr std::string_view to_string(Design design) {
    switch (design) {
        case Design::single: return "single";
        case Design::paired: return "paired";
        case Design::unpaired: return "unpaired";
        case Design::fixed_baseline: return "baseline";
    }
    return "";
}

inline constexpr std::string_view to_string(Axis axis) {
    switch (axis) {
        case Axis::both: return "both";
        case Axis::seeds_only: return "seeds";
        case Axis::examples_only: return "examples";
    }
    return "";
}

/*************************
 ***** Construction ******
 *************************/

struct PredictionRow {
    std::string example_id;
    std::string pretrain_seed;
    std::string finetune_run;
    double value = 0;
};

struct LabelRow {
    std::string example_id;
    double label = 0;
    std::optional<std::string> group_id;
};

/**
 * Assemble a dense `PredictionSet` from long-format rows.
 *
 * Examples follow the order of `labels`; runs are sorted by
 * (pretrain_seed, finetune_run) under `natural_less`, so any permutation of
 * `rows` produces the same set.
 */
inline PredictionSet build_prediction_set(std::span<const PredictionRow> rows, std::span<const LabelRow> labels) {
    std::unordered_map<std::string, std::size_t> example_index;
    std::vector<std::string> example_ids;
    std::vector<double> label_values;
    std::vector<std::string> groups;
    std::size_t n_grouped = 0;

    for (const auto& l : labels) {
        if (!example_index.try_emplace(l.example_id, example_ids.size()).second) {
            throw Error(ErrorKind::InvalidArgument, "example '" + l.example_id + "' appears twice in labels", l.example_id);
        }
        example_ids.push_back(l.example_id);
        label_values.push_back(l.label);
        if (l.group_id) {
            ++n_grouped;
            groups.push_back(*l.group_id);
        }
    }
    if (n_grouped != 0 && n_grouped != labels.size()) {
        throw Error(ErrorKind::InvalidArgument, "either every example or none must carry a group id");
    }

    std::vector<RunKey> runs;
    {
        std::map<std::pair<std::string, std::string>, int> distinct;
        for (const auto& r : rows) {
            if (distinct.try_emplace({r.pretrain_seed, r.finetune_run}, 0).second) {
                runs.push_back(RunKey{r.pretrain_seed, r.finetune_run});
            }
        }
        std::sort(runs.begin(), runs.end(), [](const RunKey& a, const RunKey& b) { return natural_less(a, b); });
    }
    std::map<std::pair<std::string, std::string>, std::size_t> run_index;
    for (std::size_t r = 0; r < runs.size(); ++r) {
        run_index[{runs[r].pretrain_seed, runs[r].finetune_run}] = r;
    }

    const std::size_t n_x = example_ids.size();
    std::vector<double> values(n_x * runs.size(), 0.0);
    std::vector<char> filled(values.size(), 0);
    for (const auto& r : rows) {
        if (!std::isfinite(r.value)) {
            throw Error(ErrorKind::NonFiniteValue, "non-finite value for example '" + r.example_id + "'", r.example_id);
        }
        auto ex = example_index.find(r.example_id);
        if (ex == example_index.end()) {
            throw Error(ErrorKind::UnknownExample, "example '" + r.example_id + "' has no label", r.example_id);
        }
        std::size_t cell = run_index[{r.pretrain_seed, r.finetune_run}] * n_x + ex->second;
        if (filled[cell]) {
            throw Error(ErrorKind::DuplicateCell,
                        "cell (" + r.example_id + ", " + r.pretrain_seed + ", " + r.finetune_run + ") appears twice",
                        r.example_id);
        }
        filled[cell] = 1;
        values[cell] = r.value;
    }
    for (std::size_t cell = 0; cell < filled.size(); ++cell) {
        if (!filled[cell]) {
            const auto& ex = example_ids[cell % n_x];
            const auto& run = runs[cell / n_x];
            throw Error(ErrorKind::MissingCell,
                        "cell (" + ex + ", " + run.pretrain_seed + ", " + run.finetune_run + ") is missing", ex);
        }
    }

    std::optional<std::vector<std::string>> group_ids;
    if (n_grouped) {
        group_ids = std::move(groups);
    }
    return PredictionSet(std::move(example_ids), std::move(label_values), std::move(group_ids), std::move(runs), std::move(values));
}

/*************************
 ******* Alignment *******
 *************************/

/**
 * Reorder `other`'s examples to match `reference`. Both must cover the same
 * example ids with identical labels.
 */
inline PredictionSet align_examples(const PredictionSet& reference, const PredictionSet& other) {
    std::unordered_map<std::string_view, std::size_t> other_index;
    for (std::size_t i = 0; i < other.n_examples(); ++i) {
        other_index.emplace(other.example_ids()[i], i);
    }
    const std::size_t n_x = reference.n_examples();
    std::vector<std::size_t> order(n_x);
    for (std::size_t i = 0; i < n_x; ++i) {
        const auto& id = reference.example_ids()[i];
        auto it = other_index.find(id);
        if (it == other_index.end()) {
            throw Error(ErrorKind::ExampleMismatch, "example '" + id + "' missing from the second arm", id);
        }
        order[i] = it->second;
    }
    if (other.n_examples() != n_x) {
        std::unordered_map<std::string_view, int> ref_ids;
        for (const auto& id : reference.example_ids()) {
            ref_ids.emplace(id, 0);
        }
        for (const auto& id : other.example_ids()) {
            if (!ref_ids.count(id)) {
                throw Error(ErrorKind::ExampleMismatch, "example '" + id + "' missing from the first arm", id);
            }
        }
    }
    for (std::size_t i = 0; i < n_x; ++i) {
        if (reference.labels()[i] != other.labels()[order[i]]) {
            const auto& id = reference.example_ids()[i];
            throw Error(ErrorKind::LabelMismatch, "label of example '" + id + "' differs between arms", id);
        }
    }

    std::vector<double> values(n_x * other.n_runs());
    for (std::size_t r = 0; r < other.n_runs(); ++r) {
        auto col = other.column(r);
        for (std::size_t i = 0; i < n_x; ++i) {
            values[r * n_x + i] = col[order[i]];
        }
    }
    std::optional<std::vector<std::string>> groups;
    if (other.group_ids()) {
        groups.emplace(n_x);
        for (std::size_t i = 0; i < n_x; ++i) {
            (*groups)[i] = (*other.group_ids())[order[i]];
        }
    }
    return PredictionSet(reference.example_ids(), std::vector<double>(reference.labels().begin(), reference.labels().end()),
                         std::move(groups), other.runs(), std::move(values));
}

/// Two prediction sets sharing one (example, seed) index space.
class PairedView {
public:
    const PredictionSet& base() const noexcept { return base_; }
    const PredictionSet& intervention() const noexcept { return intervention_; }

    /// True when some seed has a different number of fine-tuning runs in each arm.
    bool ragged_runs() const {
        for (std::size_t s = 0; s < base_.n_seeds(); ++s) {
            if (base_.runs_in_seed(s) != intervention_.runs_in_seed(s)) {
                return true;
            }
        }
        return false;
    }

private:
    PairedView(PredictionSet base, PredictionSet intervention)
        : base_(std::move(base)), intervention_(std::move(intervention)) {}

    friend PairedView align_paired(const PredictionSet&, const PredictionSet&);

    PredictionSet base_;
    PredictionSet intervention_;
};

inline PairedView align_paired(const PredictionSet& base, const PredictionSet& intervention) {
    PredictionSet aligned = align_examples(base, intervention);

    const auto& a = base.seed_ids();
    const auto& b = aligned.seed_ids();
    for (const auto& s : a) {
        if (std::find(b.begin(), b.end(), s) == b.end()) {
            throw Error(ErrorKind::SeedMismatch, "pretrain seed '" + s + "' missing from the intervention arm", s);
        }
    }
    for (const auto& s : b) {
        if (std::find(a.begin(), a.end(), s) == a.end()) {
            throw Error(ErrorKind::SeedMismatch, "pretrain seed '" + s + "' missing from the base arm", s);
        }
    }
    // Same seed sets; a seed order other than natural order is possible when
    // the set was built directly, so reorder runs to follow the base.
    if (a != b) {
        std::vector<RunKey> runs;
        std::vector<double> values;
        for (const auto& s : a) {
            std::size_t j = static_cast<std::size_t>(std::find(b.begin(), b.end(), s) - b.begin());
            for (std::size_t r = aligned.seed_begin(j); r < aligned.seed_end(j); ++r) {
                runs.push_back(aligned.runs()[r]);
                auto col = aligned.column(r);
                values.insert(values.end(), col.begin(), col.end());
            }
        }
        aligned = PredictionSet(aligned.example_ids(), std::vector<double>(aligned.labels().begin(), aligned.labels().end()),
                                aligned.group_ids(), std::move(runs), std::move(values));
    }
    return PairedView(base, std::move(aligned));
}

} // namespace multiboot

#endif
