#include <gtest/gtest.h>

#include "support/fixtures.hpp"

using namespace optree;
using testsupport::f1_store;

namespace {

std::string oracle(std::string_view tmpl, Slots slots, const EventStore& store = f1_store()) {
    return gold_display(oracle_answer(store, tmpl, slots));
}

} // namespace

TEST(Oracle, F1ItalianAfterWorkout) {
    EXPECT_EQ(oracle("count_after_workout", {{"cuisine", "Italian"}}), "2");
}

TEST(Oracle, F1ItalianAfterYogaOnly) {
    EXPECT_EQ(oracle("count_after_typed_workout", {{"cuisine", "Italian"}, {"workout_type", "yoga"}}), "1");
    EXPECT_EQ(oracle("count_after_typed_workout", {{"cuisine", "Italian"}, {"workout_type", "running"}}), "1");
}

TEST(Oracle, F1TopMonthForArtist) {
    EXPECT_EQ(oracle("superlative_month_artist", {{"artist", "Taylor Swift"}}), "2024-03");
}

TEST(Oracle, F1ArtistStreamsInMonth) {
    EXPECT_EQ(oracle("count_artist_month", {{"artist", "Taylor Swift"}, {"month", "April 2024"}}), "1");
    EXPECT_EQ(oracle("count_artist_month", {{"artist", "Taylor Swift"}, {"month", "March 2024"}}), "2");
}

TEST(Oracle, F1WorkoutStats) {
    EXPECT_EQ(oracle("count_workout_type", {{"workout_type", "yoga"}}), "1");
    EXPECT_EQ(oracle("max_workout_duration", {{"workout_type", "running"}}), "45");
}

TEST(Oracle, EmptyStoreCountsZero) {
    EventStore empty;
    EXPECT_EQ(oracle("count_after_workout", {{"cuisine", "Italian"}}, empty), "0");
}

TEST(Oracle, UnknownTemplateAndTies) {
    EXPECT_THROW(oracle_answer(f1_store(), "no_such_template", {}), UnknownTemplate);
    // e1 is a Friday and e4 a Saturday: one workout each.
    EXPECT_THROW(oracle_answer(f1_store(), "superlative_weekday_workout", {}), TemplateUnsatisfiable);
}
