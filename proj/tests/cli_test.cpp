#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "cli_support.hpp"

namespace {

using namespace pvi::testing;

TEST(CliElboCurve, DefaultsSatisfyIdentity) {
  const RunResult r = run_cli("elbo-curve -o curve.csv", "curve");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const Table t = read_csv("curve.csv");
  ASSERT_EQ(t.columns, (std::vector<std::string>{"mu", "elbo", "kl", "log_evidence"}));
  ASSERT_EQ(t.rows.size(), 41u);
  EXPECT_DOUBLE_EQ(t.num(0, "mu"), -0.5);
  EXPECT_DOUBLE_EQ(t.num(40, "mu"), 1.5);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    EXPECT_NEAR(t.num(i, "elbo") + t.num(i, "kl"), -1.673976, 1e-5) << "row " << i;
    EXPECT_EQ(t.rows[i][t.col("log_evidence")], t.rows[0][t.col("log_evidence")]);
    EXPECT_GE(t.num(i, "kl"), 0.0);
  }
}

TEST(CliElboCurve, SinglePointKl) {
  const RunResult r = run_cli("elbo-curve --mu 0.568147 -o one.csv", "one");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const Table t = read_csv("one.csv");
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_NEAR(t.num(0, "kl"), 0.020791, 1e-6);
}

TEST(CliElboCurve, RejectsNonPositiveSigma) {
  for (const char* s : {"0", "-1"}) {
    const RunResult r = run_cli(std::string("elbo-curve --sigma ") + s + " -o bad.csv", "bad");
    EXPECT_NE(r.exit_code, 0);
    EXPECT_NE(r.err.find("sigma"), std::string::npos) << r.err;
  }
}

TEST(CliFit, ReparamDefaultsReachOptimum) {
  const RunResult r = run_cli("fit -o fit.csv", "fit");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto kv = summary_fields(r.out);
  ASSERT_TRUE(kv.count("mu")) << r.out;
  EXPECT_NEAR(std::stod(kv.at("mu")), 0.568147, 0.02);
  EXPECT_NEAR(std::stod(kv.at("sigma")), 0.5, 0.02);
  const Table t = read_csv("fit.csv");
  EXPECT_FALSE(t.rows.empty());
  EXPECT_LE(t.rows.size(), 5001u);
  EXPECT_NE(t.meta.find("\"command\":\"fit\""), std::string::npos);
}

TEST(CliFit, NormalFamilyIsRejected) {
  const RunResult r = run_cli("fit --family normal -o normal.csv", "normal");
  EXPECT_NE(r.exit_code, 0);
  EXPECT_NE(r.err.find("q(z) needs to be zero whenever p(z|x) is zero"), std::string::npos)
      << r.err;
}

TEST(CliFit, SameSeedSameBytes) {
  ASSERT_EQ(run_cli("fit --estimator score --max-steps 300 --seed 7 -o a.csv", "a").exit_code, 0);
  ASSERT_EQ(run_cli("fit --estimator score --max-steps 300 --seed 7 -o b.csv", "b").exit_code, 0);
  ASSERT_EQ(run_cli("fit --estimator score --max-steps 300 --seed 8 -o c.csv", "c").exit_code, 0);
  EXPECT_EQ(slurp("a.csv"), slurp("b.csv"));
  EXPECT_NE(slurp("a.csv"), slurp("c.csv"));
}

TEST(CliGradcheck, DefaultsOrderVariances) {
  const RunResult r = run_cli("gradcheck -o grad.csv", "grad");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const Table t = read_csv("grad.csv");
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_NEAR(t.num(0, "truth"), 1.733703, 1e-6);
  EXPECT_NEAR(t.num(1, "truth"), 0.866852, 1e-6);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_GT(t.num(i, "score_var"), t.num(i, "reparam_var"));
    EXPECT_LT(std::abs(t.num(i, "score_mean") - t.num(i, "truth")), 4 * t.num(i, "score_se"));
    EXPECT_LT(std::abs(t.num(i, "reparam_mean") - t.num(i, "truth")),
              4 * t.num(i, "reparam_se"));
  }
}

TEST(CliAmortize, GeneratedDataset) {
  const RunResult r = run_cli("amortize --generate 200 --seed 3 -o am.csv --curve loss.csv", "am");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto kv = summary_fields(r.out);
  EXPECT_LT(std::stod(kv.at("median_abs_mu_error")), 0.05);
  EXPECT_GE(std::stod(kv.at("gap")), -3 * std::stod(kv.at("gap_se")));
  const Table t = read_csv("am.csv");
  EXPECT_EQ(t.rows.size(), 200u);
  EXPECT_EQ(read_csv("loss.csv").rows.size(), 50u);
}

TEST(CliAmortize, SinglePointFile) {
  std::ofstream("single.txt") << "1.0\n";
  const RunResult r = run_cli(
      "amortize --data single.txt --epochs 2000 --batch 1 --step-size 0.05 --seed 53 -o single.csv",
      "single");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto kv = summary_fields(r.out);
  EXPECT_LT(std::abs(std::stod(kv.at("gap"))), 3 * std::stod(kv.at("gap_se")));
}

TEST(CliAmortize, MissingFileNamesPath) {
  const RunResult r = run_cli("amortize --data no-such-file.txt -o x.csv", "missing");
  EXPECT_NE(r.exit_code, 0);
  EXPECT_NE(r.err.find("no-such-file.txt"), std::string::npos) << r.err;
}

TEST(CliAmortize, NonPositiveObservationNamesLine) {
  std::ofstream("neg.txt") << "1.0\n0.5\n-3\n";
  const RunResult r = run_cli("amortize --data neg.txt -o x.csv", "neg");
  EXPECT_NE(r.exit_code, 0);
  EXPECT_NE(r.err.find("neg.txt:3"), std::string::npos) << r.err;
}

TEST(CliOutput, JsonLinesStartWithMetadata) {
  const RunResult r = run_cli("elbo-curve --mu 0 --mu 1 --format jsonl -o c.jsonl", "jsonl");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto lines = split(slurp("c.jsonl"), '\n');
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0].rfind("{\"meta\":", 0), 0u) << lines[0];
  for (const char* key : {"\"command\":\"elbo-curve\"", "\"seed\":0", "\"version\":", "\"config\":"}) {
    EXPECT_NE(lines[0].find(key), std::string::npos) << key;
  }
  EXPECT_EQ(lines[1].rfind("{\"mu\":0,", 0), 0u) << lines[1];
  EXPECT_EQ(slurp("c.jsonl").find('\r'), std::string::npos);
}

TEST(CliOutput, CsvMetadataAndNineDigits) {
  ASSERT_EQ(run_cli("elbo-curve --mu 0 -o d.csv", "digits").exit_code, 0);
  const Table t = read_csv("d.csv");
  EXPECT_NE(t.meta.find("\"command\":\"elbo-curve\""), std::string::npos);
  EXPECT_EQ(t.rows[0][t.col("elbo")], "-2.23365273");
}

TEST(CliUsage, MissingSubcommandOrOutputFails) {
  EXPECT_NE(run_cli("", "usage").exit_code, 0);
  EXPECT_NE(run_cli("fit", "usage").exit_code, 0);
  EXPECT_NE(run_cli("fit --estimator magic -o z.csv", "usage").exit_code, 0);
}

}  // namespace
