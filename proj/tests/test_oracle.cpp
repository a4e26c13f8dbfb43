#include <gtest/gtest.h>

#include "support.hpp"

using namespace cesopt;
using namespace cesopt::testing;

namespace {

class OracleSuite : public ::testing::TestWithParam<int> {
protected:
    static const std::vector<OracleCase>& cases() {
        static const std::vector<OracleCase> c = make_oracle_cases(20240601, 50);
        return c;
    }
};

}  // namespace

TEST_P(OracleSuite, WindowOptimizerMatchesOracle) {
    const OracleCase& oc = cases().at(static_cast<std::size_t>(GetParam()));
    ASSERT_LE(oc.p.steps, 12);
    const OracleOutcome r = run_oracle_case(oc);
    EXPECT_TRUE(r.pass) << r.detail;
}

INSTANTIATE_TEST_SUITE_P(Seeded, OracleSuite, ::testing::Range(0, 50));

TEST(OracleCases, Deterministic) {
    const auto a = make_oracle_cases(5, 10), b = make_oracle_cases(5, 10);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].p.spot, b[i].p.spot);
        EXPECT_EQ(a[i].p.households[0].fixed, b[i].p.households[0].fixed);
    }
}
