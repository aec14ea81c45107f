#include <pla/dispersion.hpp>
#include <pla/errors.hpp>
#include <pla/ingest.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>

namespace pla {
namespace {

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / ("pla_test_" + name);
  std::ofstream(path) << text;
  return path;
}

Eigen::MatrixXd random_matrix(std::uint64_t seed, Eigen::Index rows, Eigen::Index cols) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(3.0, 2.0);
  Eigen::MatrixXd x(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) x(i, j) = normal(rng) * (j + 1);
  return x;
}

TEST(LoadCsv, ParsesHeaderAndRows) {
  const auto path = write_temp("basic.csv", "a,b,c\n1,2,3\n4,5,6\n7,8,9\n10,11,12\n13,14,15\n");
  const DataMatrix data = load_csv(path);
  EXPECT_EQ(data.n_rows(), 5);
  EXPECT_EQ(data.n_cols(), 3);
  EXPECT_EQ(data.names(), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_DOUBLE_EQ(data.values()(4, 2), 15.0);
}

TEST(LoadCsv, DropRowPolicyRemovesMissingRows) {
  const auto path = write_temp("na.csv", "a,b,c\n1,2,3\n4,NA,6\n7,8,9\n10,11,12\n13,14,15\n");
  CsvOptions opts;
  opts.na_policy = NaPolicy::kDropRow;
  EXPECT_EQ(load_csv(path, opts).n_rows(), 4);
  EXPECT_THROW(load_csv(path), ParseError);
}

TEST(LoadCsv, SingleColumnIsDimensionError) {
  const auto path = write_temp("one.csv", "a\n1\n2\n3\n");
  EXPECT_THROW(load_csv(path), DimensionError);
}

TEST(LoadCsv, SingleRowIsDimensionError) {
  const auto path = write_temp("onerow.csv", "a,b\n1,2\n");
  EXPECT_THROW(load_csv(path), DimensionError);
}

TEST(LoadCsv, RaggedRowIsParseError) {
  const auto path = write_temp("ragged.csv", "a,b,c\n1,2,3\n4,5\n");
  EXPECT_THROW(load_csv(path), ParseError);
}

TEST(LoadCsv, NoHeaderGeneratesNames) {
  const auto path = write_temp("nohdr.csv", "1;2\n3;4\n5;7\n");
  CsvOptions opts;
  opts.has_header = false;
  opts.delimiter = ';';
  const DataMatrix data = load_csv(path, opts);
  EXPECT_EQ(data.names(), (std::vector<std::string>{"X1", "X2"}));
  EXPECT_EQ(data.n_rows(), 3);
}

TEST(LoadCsv, DuplicateNamesRejected) {
  const auto path = write_temp("dup.csv", "a,a\n1,2\n3,4\n");
  EXPECT_THROW(load_csv(path), ParseError);
}

TEST(LoadCsv, MissingFileIsParseError) { EXPECT_THROW(load_csv("/nonexistent/pla.csv"), ParseError); }

TEST(LoadCsv, WriteThenReloadIsIdentical) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const DataMatrix data(random_matrix(seed, 17, 4), {"alpha", "beta", "gamma", "delta"});
    const auto path = write_temp("roundtrip.csv", "");
    write_csv(data, path);
    EXPECT_EQ(load_csv(path), data);
  }
}

TEST(Standardize, SimpleColumn) {
  Eigen::MatrixXd x(3, 2);
  x << 1, 4, 2, 0, 3, 5;
  const DataMatrix z = standardize_columns(DataMatrix(x));
  EXPECT_NEAR(z.values()(0, 0), -1.0, 1e-15);
  EXPECT_NEAR(z.values()(1, 0), 0.0, 1e-15);
  EXPECT_NEAR(z.values()(2, 0), 1.0, 1e-15);
}

TEST(Standardize, ConstantColumnNamed) {
  Eigen::MatrixXd x(3, 2);
  x << 1, 5, 2, 5, 3, 5;
  try {
    standardize_columns(DataMatrix(x, {"a", "flat"}));
    FAIL() << "expected DegenerateColumnError";
  } catch (const DegenerateColumnError& e) {
    EXPECT_NE(std::string(e.what()).find("flat"), std::string::npos);
  }
}

TEST(Standardize, MomentsAfterTransform) {
  const DataMatrix z = standardize_columns(DataMatrix(random_matrix(7, 100, 4)));
  const auto& v = z.values();
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    const double mean = v.col(c).mean();
    const double var = (v.col(c).array() - mean).square().sum() / (v.rows() - 1);
    EXPECT_LT(std::abs(mean), 1e-12);
    EXPECT_LT(std::abs(var - 1.0), 1e-12);
  }
}

TEST(Standardize, Idempotent) {
  const DataMatrix once = standardize_columns(DataMatrix(random_matrix(11, 60, 5)));
  const DataMatrix twice = standardize_columns(once);
  EXPECT_LT((once.values() - twice.values()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Standardize, CorrelationEqualsCovarianceOfStandardized) {
  for (std::uint64_t seed = 20; seed < 30; ++seed) {
    Eigen::MatrixXd x = random_matrix(seed, 50, 6);
    x.col(3) += 0.7 * x.col(1);
    const DataMatrix data(x);
    const auto r = sample_correlation(data).entries();
    const auto c = sample_covariance(standardize_columns(data)).entries();
    EXPECT_LT((r - c).cwiseAbs().maxCoeff(), 1e-10) << "seed " << seed;
  }
}

}  // namespace
}  // namespace pla
