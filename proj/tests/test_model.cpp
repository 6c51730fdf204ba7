#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "multiboot/model.hpp"
#include "test_support.hpp"

using namespace multiboot;

namespace {

std::vector<LabelRow> labels3() {
    return {{"e0", 1, std::nullopt}, {"e1", 0, std::nullopt}, {"e2", 1, std::nullopt}};
}

std::vector<PredictionRow> full_grid(const std::vector<std::string>& examples, const std::vector<RunKey>& runs) {
    std::vector<PredictionRow> rows;
    double v = 0;
    for (const auto& r : runs) {
        for (const auto& e : examples) {
            rows.push_back(PredictionRow{e, r.pretrain_seed, r.finetune_run, v});
            v += 1;
        }
    }
    return rows;
}

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorKind::InvalidArgument;
}

} // namespace

TEST(BuildPredictionSet, MinimalCompleteGrid) {
    auto rows = full_grid({"e0", "e1", "e2"}, {{"s", "0"}});
    auto labels = labels3();
    auto set = build_prediction_set(rows, labels);
    EXPECT_EQ(set.n_examples(), 3u);
    EXPECT_EQ(set.n_seeds(), 1u);
    EXPECT_EQ(set.n_runs(), 1u);
    EXPECT_EQ(set.value(2, 0), 2.0);
}

TEST(BuildPredictionSet, MissingCell) {
    auto rows = full_grid({"e0", "e1", "e2"}, {{"seedA", "run0"}, {"seedB", "run0"}});
    rows.erase(std::remove_if(rows.begin(), rows.end(), [](const PredictionRow& r) {
                   return r.example_id == "e2" && r.pretrain_seed == "seedB";
               }),
               rows.end());
    auto labels = labels3();
    try {
        build_prediction_set(rows, labels);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::MissingCell);
        EXPECT_NE(std::string(e.what()).find("seedB"), std::string::npos);
    }
}

TEST(BuildPredictionSet, RaggedRunsPreserved) {
    auto rows = full_grid({"e0", "e1", "e2"}, {{"A", "0"}, {"A", "1"}, {"A", "2"}, {"B", "0"}, {"B", "1"}});
    auto labels = labels3();
    auto set = build_prediction_set(rows, labels);
    ASSERT_EQ(set.n_seeds(), 2u);
    EXPECT_EQ(set.runs_in_seed(0), 3u);
    EXPECT_EQ(set.runs_in_seed(1), 2u);
    EXPECT_EQ(set.seed_ids(), (std::vector<std::string>{"A", "B"}));
}

TEST(BuildPredictionSet, ErrorKinds) {
    auto labels = labels3();
    {
        auto rows = full_grid({"e0", "e1", "e2"}, {{"s", "0"}});
        rows.push_back(rows.front());
        EXPECT_EQ(kind_of([&] { build_prediction_set(rows, labels); }), ErrorKind::DuplicateCell);
    }
    {
        auto rows = full_grid({"e0", "e1", "e2", "e9"}, {{"s", "0"}});
        EXPECT_EQ(kind_of([&] { build_prediction_set(rows, labels); }), ErrorKind::UnknownExample);
    }
    {
        auto rows = full_grid({"e0", "e1", "e2"}, {{"s", "0"}});
        rows[1].value = std::numeric_limits<double>::quiet_NaN();
        EXPECT_EQ(kind_of([&] { build_prediction_set(rows, labels); }), ErrorKind::NonFiniteValue);
        rows[1].value = std::numeric_limits<double>::infinity();
        EXPECT_EQ(kind_of([&] { build_prediction_set(rows, labels); }), ErrorKind::NonFiniteValue);
    }
    {
        auto rows = full_grid({"e0", "e1", "e2"}, {{"s", "0"}});
        std::vector<LabelRow> partial_groups{{"e0", 1, "g"}, {"e1", 0, std::nullopt}, {"e2", 1, "g"}};
        EXPECT_EQ(kind_of([&] { build_prediction_set(rows, partial_groups); }), ErrorKind::InvalidArgument);
    }
    {
        std::vector<PredictionRow> none;
        EXPECT_EQ(kind_of([&] { build_prediction_set(none, labels); }), ErrorKind::InvalidArgument);
    }
}

TEST(BuildPredictionSet, PermutedRowsGiveIdenticalSet) {
    std::mt19937_64 gen(7);
    auto rows = full_grid({"e0", "e1", "e2"}, {{"10", "0"}, {"2", "1"}, {"2", "0"}, {"b", "0"}});
    auto labels = labels3();
    auto reference = build_prediction_set(rows, labels);
    EXPECT_EQ(reference.seed_ids(), (std::vector<std::string>{"2", "10", "b"}));
    for (int trial = 0; trial < 50; ++trial) {
        std::shuffle(rows.begin(), rows.end(), gen);
        EXPECT_EQ(build_prediction_set(rows, labels), reference);
    }
}

TEST(BuildPredictionSet, GroupsIndexed) {
    auto rows = full_grid({"e0", "e1", "e2"}, {{"s", "0"}});
    std::vector<LabelRow> labels{{"e0", 1, "nurse"}, {"e1", 0, "pilot"}, {"e2", 1, "nurse"}};
    auto set = build_prediction_set(rows, labels);
    ASSERT_TRUE(set.has_groups());
    ASSERT_EQ(set.group_members().size(), 2u);
    EXPECT_EQ(set.group_members()[0], (std::vector<std::size_t>{0, 2}));
    EXPECT_EQ(set.group_members()[1], (std::vector<std::size_t>{1}));
}

TEST(PredictionSet, RejectsNonContiguousSeeds) {
    EXPECT_THROW(fixtures::make_set({1, 0}, {{"a", "0", {1, 0}}, {"b", "0", {1, 0}}, {"a", "1", {1, 0}}}), Error);
}

namespace {

PredictionSet five_seed_set(const std::vector<std::string>& seeds, std::vector<double> labels = {1, 0, 1}) {
    std::vector<fixtures::Column> cols;
    for (const auto& s : seeds) {
        cols.push_back({s, "0", {1, 0, 0}});
    }
    return fixtures::make_set(std::move(labels), cols);
}

} // namespace

TEST(AlignPaired, SharedSeeds) {
    auto base = five_seed_set({"0", "1", "2", "3", "4"});
    auto other = five_seed_set({"0", "1", "2", "3", "4"});
    auto pair = align_paired(base, other);
    EXPECT_EQ(pair.base().n_seeds(), 5u);
    EXPECT_EQ(pair.intervention().n_seeds(), 5u);
    EXPECT_FALSE(pair.ragged_runs());
}

TEST(AlignPaired, MissingSeedNamed) {
    auto base = five_seed_set({"0", "1", "2", "3", "4"});
    auto other = five_seed_set({"0", "1", "2", "4"});
    try {
        align_paired(base, other);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::SeedMismatch);
        EXPECT_EQ(e.detail(), "3");
    }
}

TEST(AlignPaired, LabelMismatch) {
    auto base = five_seed_set({"0", "1"});
    auto other = five_seed_set({"0", "1"}, {1, 1, 1});
    try {
        align_paired(base, other);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::LabelMismatch);
        EXPECT_EQ(e.detail(), "e1");
    }
}

TEST(AlignPaired, ExampleMismatchAndReordering) {
    auto base = build_prediction_set(
        std::vector<PredictionRow>{{"a", "0", "0", 0.1}, {"b", "0", "0", 0.2}},
        std::vector<LabelRow>{{"a", 1, std::nullopt}, {"b", 0, std::nullopt}});
    auto swapped = build_prediction_set(
        std::vector<PredictionRow>{{"a", "0", "0", 0.3}, {"b", "0", "0", 0.4}},
        std::vector<LabelRow>{{"b", 0, std::nullopt}, {"a", 1, std::nullopt}});
    auto pair = align_paired(base, swapped);
    EXPECT_EQ(pair.intervention().example_ids(), base.example_ids());
    EXPECT_EQ(pair.intervention().value(0, 0), 0.3);
    EXPECT_EQ(pair.intervention().value(1, 0), 0.4);

    auto other = build_prediction_set(
        std::vector<PredictionRow>{{"a", "0", "0", 0.3}, {"c", "0", "0", 0.4}},
        std::vector<LabelRow>{{"a", 1, std::nullopt}, {"c", 0, std::nullopt}});
    try {
        align_paired(base, other);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ExampleMismatch);
        EXPECT_EQ(e.detail(), "b");
    }
}

TEST(AlignPaired, RaggedRunsFlagged) {
    auto base = fixtures::make_set({1, 0}, {{"0", "0", {1, 0}}, {"0", "1", {1, 1}}});
    auto other = fixtures::make_set({1, 0}, {{"0", "0", {1, 0}}});
    EXPECT_TRUE(align_paired(base, other).ragged_runs());
}

TEST(DesignSpec, Validation) {
    DesignSpec d;
    EXPECT_EQ(d.nboot, 1000u);
    EXPECT_EQ(d.ci_level, 0.95);
    EXPECT_NO_THROW(d.validate());
    d.ci_level = 1.0;
    EXPECT_THROW(d.validate(), Error);
    d.ci_level = 0.95;
    d.nboot = 0;
    EXPECT_THROW(d.validate(), Error);
    d.nboot = 10;
    d.design = Design::fixed_baseline;
    EXPECT_THROW(d.validate(), Error);
    d.baseline_value = 0.5;
    EXPECT_NO_THROW(d.validate());
    d.design = Design::paired;
    EXPECT_THROW(d.validate(), Error);
}
