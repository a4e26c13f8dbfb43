#include <gtest/gtest.h>

#include <cesopt/assessment.hpp>

#include "published_tables.hpp"

#include <cmath>

using namespace cesopt;
using namespace cesopt::testing;

TEST(PublishedTables, CommunityBenefitMeanAndSpread) {
    const auto v = aggregation_cells(kCesAfb, 1);
    ASSERT_EQ(v.size(), 16u);
    EXPECT_NEAR(mean(v), kCesAfbMean, 0.5);
    EXPECT_NEAR(cv(v), kCesAfbCv, 0.005);
}

TEST(PublishedTables, CommunityCostMeanAndSpread) {
    const auto v = aggregation_cells(repeat_row(kCesEacRow, 5), 1);
    EXPECT_NEAR(mean(v), kCesEacMean, 0.5);
    EXPECT_NEAR(cv(v), kCesEacCv, 0.005);
}

TEST(PublishedTables, SampleDeviationDoesNotReproduceSpread) {
    // Population deviation is the reading that matches the published spread.
    const auto v = aggregation_cells(kCesAfb, 1);
    const double mu = mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - mu) * (x - mu);
    EXPECT_GT(std::abs(std::sqrt(ss / 15.0) / mu - kCesAfbCv), 0.005);
}

TEST(PublishedTables, ValueIsBenefitMinusCostUpToRounding) {
    // The grids are rounded independently, so single cells may be off by 1.
    for (std::size_t i = 0; i < kCesAfb.size(); ++i)
        for (std::size_t j = 0; j < 4; ++j)
            EXPECT_LE(std::abs(kCesAfb[i][j] - kCesEacRow[j] - kCesEav[i][j]), 1.0) << i << "," << j;
    for (std::size_t i = 0; i < kHesAfb.size(); ++i)
        for (std::size_t j = 0; j < 4; ++j)
            EXPECT_LE(std::abs(kHesAfb[i][j] - kHesEacRow[j] - kHesEav[i][j]), 1.0) << i << "," << j;
    EXPECT_EQ(kCesAfb[2][0] - kCesEacRow[0], kCesEav[2][0]);   // 90 - 121 = -31
}
