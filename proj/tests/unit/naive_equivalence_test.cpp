#include <gtest/gtest.h>

#include "support/naive.hpp"
#include "support/properties.hpp"
#include "support/random_plans.hpp"

class OperatorEquivalence : public ::testing::TestWithParam<std::string> {};

TEST_P(OperatorEquivalence, MatchesNaiveReference) {
    auto r = testsupport::operator_equivalence(GetParam(), 150, std::hash<std::string>{}(GetParam()));
    EXPECT_TRUE(r.ok()) << r.first_failure;
    EXPECT_LT(r.both_rejected, r.cases) << "every instance was rejected";
}

INSTANTIATE_TEST_SUITE_P(AllOperators, OperatorEquivalence,
                         ::testing::ValuesIn(testsupport::equivalence_operators()),
                         [](const auto& info) { return info.param; });

TEST(NaiveReference, NumericKeysGroupAcrossTags) {
    auto rng = testsupport::Rng(5);
    auto store = testsupport::random_store(rng, 4);
    std::vector<optree::ResultItem> items(3);
    items[0].attrs["a"] = optree::Value(2);
    items[1].attrs["a"] = optree::Value(2.0);
    items[2].attrs["a"] = optree::Value(3);
    auto expected = naive::group_by(items, {"a"}, store);
    auto actual = optree::eval_group_by(items, {"a"}, store);
    ASSERT_EQ(actual.size(), 2u);
    EXPECT_EQ(actual[0].members.size(), 2u);
    EXPECT_EQ(naive::multiset(expected), naive::multiset(actual));
}
