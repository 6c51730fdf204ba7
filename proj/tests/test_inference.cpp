#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "multiboot/analysis.hpp"
#include "multiboot/cli.hpp"
#include "multiboot/inference.hpp"
#include "test_support.hpp"

using namespace multiboot;

namespace {

DesignSpec design_of(Design d, double level = 0.95) {
    DesignSpec spec;
    spec.design = d;
    spec.ci_level = level;
    return spec;
}

std::vector<double> random_samples(std::mt19937_64& gen) {
    std::uniform_int_distribution<std::size_t> size(1, 300);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> out(size(gen));
    for (auto& v : out) v = z(gen);
    return out;
}

} // namespace

TEST(PercentileCi, Examples) {
    std::vector<double> s{1, 2, 3, 4, 5};
    auto ci = percentile_ci(s, 0.95);
    EXPECT_EQ(ci.lower, 1.1);
    EXPECT_EQ(ci.upper, 4.9);

    auto half = percentile_ci(s, 0.5);
    EXPECT_EQ(half.lower, 2.0);
    EXPECT_EQ(half.upper, 4.0);

    std::vector<double> flat(17, 0.25);
    auto c = percentile_ci(flat, 0.9);
    EXPECT_EQ(c.lower, 0.25);
    EXPECT_EQ(c.upper, 0.25);

    std::vector<double> shuffled{5, 1, 4, 2, 3};
    auto cs = percentile_ci(shuffled, 0.95);
    EXPECT_EQ(cs.lower, 1.1);
    EXPECT_EQ(cs.upper, 4.9);
}

TEST(PercentileCi, Errors) {
    std::vector<double> none;
    try {
        percentile_ci(none, 0.95);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EmptySamples);
    }
    std::vector<double> s{1, 2};
    EXPECT_THROW(percentile_ci(s, 0.0), Error);
    EXPECT_THROW(percentile_ci(s, 1.0), Error);
}

TEST(PercentileCi, SingleSampleCollapses) {
    std::vector<double> one{0.42};
    auto ci = percentile_ci(one, 0.95);
    EXPECT_EQ(ci.lower, 0.42);
    EXPECT_EQ(ci.upper, 0.42);
}

TEST(PercentileCi, MonotoneInLevel) {
    std::mt19937_64 gen(1);
    const std::vector<double> levels{0.05, 0.25, 0.5, 0.8, 0.9, 0.95, 0.99, 0.999};
    for (int t = 0; t < 200; ++t) {
        auto s = random_samples(gen);
        Interval prev = percentile_ci(s, levels.front());
        for (std::size_t k = 1; k < levels.size(); ++k) {
            auto ci = percentile_ci(s, levels[k]);
            EXPECT_LE(ci.lower, prev.lower);
            EXPECT_GE(ci.upper, prev.upper);
            prev = ci;
        }
    }
}

TEST(PercentileCi, TranslationEquivariant) {
    std::mt19937_64 gen(2);
    std::uniform_int_distribution<int> shift(-1000, 1000);
    for (int t = 0; t < 200; ++t) {
        // Dyadic samples and integer shifts keep every step exact.
        auto s = random_samples(gen);
        for (auto& v : s) v = std::round(v * 64) / 64;
        double c = shift(gen);
        auto moved = s;
        for (auto& v : moved) v += c;
        auto a = percentile_ci(s, 0.95), b = percentile_ci(moved, 0.95);
        EXPECT_NEAR(b.lower, a.lower + c, 1e-9);
        EXPECT_NEAR(b.upper, a.upper + c, 1e-9);
    }
}

TEST(PValue, Examples) {
    std::vector<double> mixed{-0.1, 0.2, 0.0, 0.3};
    EXPECT_EQ(p_value_leq_zero(mixed), 0.5);
    std::vector<double> positive{0.1, 0.2, 1e-9};
    EXPECT_EQ(p_value_leq_zero(positive), 0.0);
    std::vector<double> zeros(50, 0.0);
    EXPECT_EQ(p_value_leq_zero(zeros), 1.0);
    std::vector<double> none;
    EXPECT_THROW(p_value_leq_zero(none), Error);
}

TEST(PValue, PermutationInvariantAndAntitone) {
    std::mt19937_64 gen(3);
    for (int t = 0; t < 200; ++t) {
        auto s = random_samples(gen);
        double p = p_value_leq_zero(s);
        auto perm = s;
        std::shuffle(perm.begin(), perm.end(), gen);
        EXPECT_EQ(p_value_leq_zero(perm), p);
        auto up = s;
        for (auto& v : up) v += 0.3;
        EXPECT_LE(p_value_leq_zero(up), p);
        EXPECT_GE(p, 0.0);
        EXPECT_LE(p, 1.0);
    }
}

TEST(BaselineComparison, Examples) {
    std::vector<double> high(20, 0.9);
    auto above = baseline_comparison(high, 0.8);
    EXPECT_EQ(above.p_value, 0.0);
    EXPECT_EQ(above.placement, 0.0);

    std::vector<double> s{0.1, 0.5, 0.3, 0.2};
    EXPECT_EQ(baseline_comparison(s, 0.5).p_value, 1.0);
    EXPECT_EQ(baseline_comparison(s, 0.25).placement, 0.5);

    EXPECT_THROW(baseline_comparison(s, std::nan("")), Error);
}

TEST(Histogram, CountsAndEdges) {
    std::mt19937_64 gen(4);
    for (int t = 0; t < 100; ++t) {
        auto s = random_samples(gen);
        auto h = histogram(s);
        ASSERT_EQ(h.edges.size(), h.counts.size() + 1);
        EXPECT_GE(h.counts.size(), 1u);
        EXPECT_LE(h.counts.size(), s.size());
        EXPECT_EQ(h.edges.front(), *std::min_element(s.begin(), s.end()));
        EXPECT_EQ(h.edges.back(), *std::max_element(s.begin(), s.end()));
        EXPECT_TRUE(std::is_sorted(h.edges.begin(), h.edges.end()));
        std::size_t total = 0;
        for (auto c : h.counts) total += c;
        EXPECT_EQ(total, s.size());
    }
}

TEST(Histogram, ConstantSamplesOneBin) {
    std::vector<double> s(10, 3.0);
    auto h = histogram(s);
    EXPECT_EQ(h.edges, (std::vector<double>{3.0, 3.0}));
    EXPECT_EQ(h.counts, (std::vector<std::size_t>{10}));
}

TEST(Histogram, RightEdgeClosed) {
    std::vector<double> s{0, 0, 1, 1, 2, 2, 3, 3};
    auto h = histogram(s);
    EXPECT_EQ(h.counts.back() > 0, true);
    EXPECT_EQ(h.edges.back(), 3.0);
}

TEST(Summarize, SingleDesignHasNoPValue) {
    std::vector<double> s{0.6, 0.7, 0.65};
    auto r = summarize(0.66, s, design_of(Design::single), MetricSpec{});
    EXPECT_FALSE(r.p_value);
    EXPECT_FALSE(r.delta);
    EXPECT_FALSE(r.theta_base);
    EXPECT_EQ(r.point_estimate, 0.66);
    EXPECT_EQ(r.nboot, 3u);
}

TEST(Summarize, NbootOneCollapses) {
    std::vector<double> s{0.125};
    auto r = summarize(0.125, s, design_of(Design::single), MetricSpec{});
    EXPECT_EQ(r.ci.lower, 0.125);
    EXPECT_EQ(r.ci.upper, 0.125);
    EXPECT_EQ(r.samples_sd, 0.0);
}

TEST(Summarize, DeltaIsExactDifference) {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(0, 1);
    for (int t = 0; t < 200; ++t) {
        double tb = u(gen), ti = u(gen);
        std::vector<double> s{ti - tb, 0.01, -0.02};
        std::pair<ArmResult, ArmResult> arms{ArmResult{tb, {}}, ArmResult{ti, {}}};
        auto r = summarize(ti - tb, s, design_of(Design::paired), MetricSpec{}, arms);
        EXPECT_EQ(*r.theta_intervention - *r.theta_base - *r.delta, 0.0);
        EXPECT_EQ(r.point_estimate, *r.delta);
    }
}

TEST(Summarize, TiesAtZeroReported) {
    std::vector<double> s{0.0, 0.0, 0.1, -0.1};
    auto r = summarize(0.0, s, design_of(Design::paired), MetricSpec{});
    EXPECT_EQ(*r.ties_at_zero, 2u);
    EXPECT_EQ(*r.p_value, 0.75);
}

TEST(Summarize, MnliStyleTable) {
    // Report-format fixture: θ_f = 0.837, θ_f' = 0.844, all δ* positive.
    std::vector<double> s;
    for (int k = 0; k < 1000; ++k) s.push_back(0.004 + 0.006 * k / 999.0);
    std::pair<ArmResult, ArmResult> arms{ArmResult{0.837, {}}, ArmResult{0.844, {}}};
    auto r = summarize(0.844 - 0.837, s, design_of(Design::paired), MetricSpec{}, arms);
    EXPECT_EQ(*r.p_value, 0.0);
    std::ostringstream table;
    cli::render_comparison_table(table, r);
    auto text = table.str();
    EXPECT_NE(text.find("0.837"), std::string::npos) << text;
    EXPECT_NE(text.find("0.844"), std::string::npos);
    EXPECT_NE(text.find("0.007"), std::string::npos);
    EXPECT_NE(text.find("< 0.001"), std::string::npos);
}

TEST(Summarize, SquadStyleBaselineReport) {
    // Report-format fixture: θ* − baseline spread over [0.019, 0.029], no draw at or below the baseline.
    const double baseline = 0.80;
    std::vector<double> model, shifted;
    for (int k = 0; k < 1000; ++k) {
        double d = 0.019 + 0.010 * k / 999.0;
        model.push_back(baseline + d);
        shifted.push_back(d);
    }
    auto design = design_of(Design::fixed_baseline);
    design.baseline_value = baseline;
    std::pair<ArmResult, ArmResult> arms{ArmResult{baseline, {}}, ArmResult{baseline + 0.024, model}};
    auto r = summarize(0.024, shifted, design, MetricSpec{}, arms);
    EXPECT_NEAR(r.ci.lower, 0.019, 1e-3);
    EXPECT_NEAR(r.ci.upper, 0.029, 1e-3);
    EXPECT_LT(*r.p_value, 0.001);
    EXPECT_EQ(*r.baseline_placement, *r.p_value);
    ASSERT_TRUE(r.intervention_arm && r.intervention_arm->ci);
    EXPECT_FALSE(r.base_arm->ci);
}

TEST(Analysis, BaselineAllCorrectGivesZeroP) {
    auto set = fixtures::make_simple({1, 0, 1}, {{1, 0, 1}, {1, 0, 1}});
    auto design = design_of(Design::fixed_baseline);
    design.baseline_value = 0.8;
    design.nboot = 200;
    auto result = compare_to_baseline(set, MetricSpec{}, design);
    EXPECT_EQ(*result.p_value, 0.0);
    EXPECT_NEAR(result.point_estimate, 0.2, 1e-12);
    auto report = make_report(result, design, MetricSpec{});
    EXPECT_EQ(*report.p_value, 0.0);
    EXPECT_NEAR(*report.delta, 0.2, 1e-12);
}
