#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "lelab/checks.hpp"
#include "lelab/errors.hpp"

using namespace lelab;
using namespace lelab::checks;

TEST(CheckRecord, ComparisonModes) {
  EXPECT_TRUE(make_check("a", "x", 1.005, 1.0, 1e-2, Compare::AbsLe).pass);
  EXPECT_FALSE(make_check("a", "x", 1.02, 1.0, 1e-2, Compare::AbsLe).pass);
  EXPECT_TRUE(make_check("a", "x", 101.0, 100.0, 1e-2, Compare::RelLe).pass);
  EXPECT_FALSE(make_check("a", "x", 102.0, 100.0, 1e-2, Compare::RelLe).pass);
  EXPECT_TRUE(make_check("a", "x", 3.0, 3.0, 0.0, Compare::Le).pass);
  EXPECT_FALSE(make_check("a", "x", 3.0, 3.0, 0.0, Compare::Lt).pass);
  EXPECT_TRUE(make_check("a", "x", 3.0, 3.0, 0.0, Compare::Ge).pass);
  EXPECT_FALSE(make_check("a", "x", 3.0, 3.0, 0.0, Compare::Gt).pass);
  EXPECT_TRUE(make_check("a", "x", 1.0, 1.0, 0.0, Compare::Equal).pass);
  EXPECT_FALSE(make_check("a", "x", std::nan(""), 1.0, 1e9, Compare::AbsLe).pass);
  EXPECT_FALSE(make_check("a", "x", std::numeric_limits<double>::infinity(), 0.0, 0.0, Compare::Ge).pass);
}

TEST(CheckReport, PassNeedsRecordsAndNoError) {
  CheckReport r;
  EXPECT_FALSE(r.pass());
  r.add(make_check("a", "x", 0.0, 0.0, 0.0, Compare::Equal));
  EXPECT_TRUE(r.pass());
  r.error = "SolveFailure: boom";
  EXPECT_FALSE(r.pass());
  const auto j = to_json(r);
  EXPECT_EQ(j["error"], "SolveFailure: boom");
  EXPECT_EQ(j["checks"][0]["compare"], "equal");
}

TEST(Workspace, RejectsScheduleBelowStart) {
  EXPECT_THROW(Workspace({4, 20}), LabError);
  EXPECT_THROW(Workspace({40, 20}), LabError);
}

TEST(Checks, OracleOnlyTargetsAreFast) {
  const CheckReport l4 = lambda4({20, 40, 80, 160});
  EXPECT_TRUE(l4.pass()) << to_json(l4).dump(1);
  const CheckReport bad = energy({20, 40});
  EXPECT_FALSE(bad.pass());
  EXPECT_NE(bad.error.find("InsufficientData"), std::string::npos);
}
