#include "oracles.hpp"

#include <pla/errors.hpp>
#include <pla/pla.hpp>
#include <pla/simulate.hpp>

#include <gtest/gtest.h>

#include <random>

namespace pla {
namespace {

Eigen::MatrixXd worked_matrix() {
  Eigen::MatrixXd m(3, 3);
  m << 2, 0.5, 0, 0.5, 2, 0, 0, 0, 5;
  return m;
}

EigenSystem cov_es(const Eigen::MatrixXd& m) {
  return eigendecompose(DispersionMatrix(m, DispersionKind::kCovariance));
}

using Idx = std::vector<Eigen::Index>;

Block make_block(Idx vars, Idx eigs) {
  Block b;
  b.variables = std::move(vars);
  b.eigen_indices = std::move(eigs);
  return b;
}

// Gaussian sample with population covariance `cov`, drawn in the test.
DataMatrix gaussian_sample(const Eigen::MatrixXd& cov, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const Eigen::MatrixXd l = cov.llt().matrixL();
  Eigen::MatrixXd z(n, cov.rows());
  for (int i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < cov.rows(); ++j) z(i, j) = normal(rng);
  return DataMatrix(Eigen::MatrixXd(z * l.transpose()));
}

TEST(RescaleEigenvectors, ExamplesAndUnitMaximum) {
  EigenSystem es;
  es.eigenvalues = Eigen::Vector3d(3, 2, 1);
  es.eigenvectors.resize(3, 3);
  const double h = std::sqrt(0.5);
  es.eigenvectors << h, 0, 0.9, h, 0, -0.3, 0, 1, 0.3;
  const auto l = rescale_eigenvectors(es).values;
  EXPECT_LT((l.col(0) - Eigen::Vector3d(1, 1, 0)).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(l.col(1), Eigen::Vector3d(0, 0, 1));
  EXPECT_LT((l.col(2) - Eigen::Vector3d(1, -1.0 / 3, 1.0 / 3)).cwiseAbs().maxCoeff(), 1e-15);

  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    const auto r = rescale_eigenvectors(cov_es(oracle::random_psd(rng, 7))).values;
    for (Eigen::Index j = 0; j < r.cols(); ++j) EXPECT_EQ(r.col(j).cwiseAbs().maxCoeff(), 1.0);
  }
}

TEST(DetectBlocks, WorkedExample) {
  const auto p = detect_blocks(raw_loadings(cov_es(worked_matrix())), 0.3);
  ASSERT_EQ(p.blocks.size(), 2u);
  EXPECT_EQ(p.blocks[0].variables, (Idx{2}));
  EXPECT_EQ(p.blocks[0].eigen_indices, (Idx{0}));
  EXPECT_EQ(p.blocks[1].variables, (Idx{0, 1}));
  EXPECT_EQ(p.blocks[1].eigen_indices, (Idx{1, 2}));
  EXPECT_TRUE(p.residual.empty());
}

TEST(DetectBlocks, IdentityLoadingsGiveSingletons) {
  const auto es = cov_es(Eigen::Vector4d(4, 3, 2, 1).asDiagonal().toDenseMatrix());
  for (double tau : {0.01, 0.5, 0.99}) {
    const auto p = detect_blocks(raw_loadings(es), tau);
    EXPECT_EQ(p.blocks.size(), 4u);
  }
}

TEST(DetectBlocks, DenseLoadingsGiveOneBlock) {
  LoadingMatrix l{Eigen::MatrixXd::Constant(5, 5, 0.8)};
  const auto p = detect_blocks(l, 0.5);
  ASSERT_EQ(p.blocks.size(), 1u);
  EXPECT_EQ(p.blocks[0].variables.size(), 5u);
}

TEST(DetectBlocks, EqualToTauIsNotAnEdge) {
  Eigen::MatrixXd l = Eigen::MatrixXd::Identity(2, 2);
  l(0, 1) = 0.5;
  const auto strict = detect_blocks(LoadingMatrix{l}, 0.5);
  EXPECT_EQ(strict.blocks.size(), 2u);
  const auto loose = detect_blocks(LoadingMatrix{l}, 0.49);
  ASSERT_EQ(loose.blocks.size(), 1u);
  EXPECT_EQ(loose.blocks[0].variables, (Idx{0, 1}));
}

TEST(DetectBlocks, UnbalancedComponentGoesToResidualWithWarning) {
  Eigen::MatrixXd l = Eigen::MatrixXd::Identity(3, 3);
  l(1, 0) = 0.9;  // X1, X2 share eigenvector 1; eigenvector 2 is isolated
  l(1, 1) = 0.1;
  const auto p = detect_blocks(LoadingMatrix{l}, 0.5);
  EXPECT_EQ(p.residual, (Idx{0, 1}));
  EXPECT_EQ(p.residual_eigen, (Idx{0, 1}));
  ASSERT_EQ(p.blocks.size(), 1u);
  EXPECT_EQ(p.blocks[0].variables, (Idx{2}));
  EXPECT_EQ(p.warnings.size(), 2u);
}

TEST(DetectBlocks, MatchesBreadthFirstOracle) {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> tau_dist(0.05, 0.95);
  for (int t = 0; t < 100; ++t) {
    const Eigen::Index m = 3 + t % 8;
    const auto l = rescale_eigenvectors(cov_es(oracle::random_psd(rng, m, 0)));
    const double tau = tau_dist(rng);
    const auto p = detect_blocks(l, tau);
    const auto comps = oracle::bfs_components(l.values, tau);
    std::size_t balanced = 0;
    for (const auto& [vars, eigs] : comps) {
      if (vars.empty() || vars.size() != eigs.size()) continue;
      ++balanced;
      const Idx want(vars.begin(), vars.end());
      const bool found = std::any_of(p.blocks.begin(), p.blocks.end(),
                                     [&](const Block& b) { return b.variables == want; });
      EXPECT_TRUE(found);
    }
    EXPECT_EQ(p.blocks.size(), balanced);
    // Partition property.
    std::vector<int> seen(static_cast<std::size_t>(m), 0);
    for (const auto& b : p.blocks)
      for (auto v : b.variables) ++seen[static_cast<std::size_t>(v)];
    for (auto v : p.residual) ++seen[static_cast<std::size_t>(v)];
    for (int s : seen) EXPECT_EQ(s, 1);
  }
}

TEST(DetectBlocks, RecoversPlantedBlocksBelowSmallestLoading) {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> size_dist(1, 4);
  for (int t = 0; t < 40; ++t) {
    std::vector<int> sizes;
    int m = 0;
    while (m < 8) {
      sizes.push_back(size_dist(rng));
      m += sizes.back();
    }
    const Eigen::MatrixXd c = oracle::random_block_diagonal(rng, sizes);
    const auto es = cov_es(c);
    if (!degenerate_pairs(es).empty()) continue;
    const auto l = raw_loadings(es);
    double min_nonzero = 1.0;
    for (Eigen::Index i = 0; i < l.values.size(); ++i) {
      const double a = std::abs(l.values.data()[i]);
      if (a > 1e-9) min_nonzero = std::min(min_nonzero, a);
    }
    const auto p = detect_blocks(l, 0.5 * min_nonzero);
    ASSERT_EQ(p.blocks.size(), sizes.size());
    EXPECT_TRUE(p.residual.empty());
    // Reconstruct the planted partition and compare by variable sets.
    int offset = 0;
    for (int s : sizes) {
      Idx want;
      for (int i = 0; i < s; ++i) want.push_back(offset + i);
      offset += s;
      EXPECT_TRUE(std::any_of(p.blocks.begin(), p.blocks.end(), [&](const Block& b) { return b.variables == want; }));
    }
  }
}

TEST(ExplainedVariance, DiagonalCase) {
  const auto es = cov_es(Eigen::Vector3d(3, 2, 1).asDiagonal().toDenseMatrix());
  const Block b = make_block(Idx{0}, Idx{0});
  EXPECT_DOUBLE_EQ(explained_variance_exact(b, es), 0.5);
  EXPECT_DOUBLE_EQ(explained_variance_approx(b, es), 0.5);
}

TEST(ExplainedVariance, WorkedExample) {
  const auto es = cov_es(worked_matrix());
  const Block x3 = make_block(Idx{2}, Idx{0});
  const Block x12 = make_block(Idx{0, 1}, Idx{1, 2});
  EXPECT_NEAR(explained_variance_exact(x3, es), 5.0 / 9.0, 1e-12);
  EXPECT_NEAR(explained_variance_exact(x12, es), 4.0 / 9.0, 1e-12);
  EXPECT_NEAR(explained_variance_exact(x3, es), oracle::diagonal_share(worked_matrix(), {2}), 1e-12);
  EXPECT_NEAR(explained_variance_approx(x12, es), 4.0 / 9.0, 1e-12);
}

TEST(ExplainedVariance, ExactMatchesDiagonalRoute) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 30; ++t) {
    const Eigen::MatrixXd c = oracle::random_psd(rng, 6);
    const auto es = cov_es(c);
    const Block b = make_block(Idx{1, 4}, Idx{0, 1});
    EXPECT_NEAR(explained_variance_exact(b, es), oracle::diagonal_share(c, {1, 4}), 1e-12);
  }
}

TEST(ExplainedVariance, ApproxEqualsExactOnBlockDiagonal) {
  std::mt19937_64 rng(19);
  for (int t = 0; t < 20; ++t) {
    const Eigen::MatrixXd c = oracle::random_block_diagonal(rng, {2, 3, 1});
    const auto es = cov_es(c);
    const auto p = detect_blocks(raw_loadings(es), 1e-6);
    for (const auto& b : p.blocks) {
      EXPECT_LT(std::abs(explained_variance_exact(b, es) - explained_variance_approx(b, es)), 1e-12);
    }
  }
}

TEST(ExplainedVariance, ApproxCloseUnderSmallPerturbation) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> sign(-1.0, 1.0);
  Eigen::MatrixXd c = oracle::random_block_diagonal(rng, {3, 2});
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (Eigen::Index j = 3; j < 5; ++j) {
      c(i, j) = c(j, i) = 0.01 * (sign(rng) < 0 ? -1.0 : 1.0);
    }
  }
  const auto es = cov_es(c);
  const auto p = detect_blocks(raw_loadings(es), 0.2);
  ASSERT_EQ(p.blocks.size(), 2u);
  for (const auto& b : p.blocks) {
    EXPECT_LT(std::abs(explained_variance_exact(b, es) - explained_variance_approx(b, es)), 0.01);
  }
}

TEST(ExplainedVariance, ZeroTrace) {
  EigenSystem es;
  es.eigenvalues = Eigen::Vector2d::Zero();
  es.eigenvectors = Eigen::Matrix2d::Identity();
  EXPECT_THROW(explained_variance_exact(make_block(Idx{0}, Idx{0}), es), ZeroTraceError);
  EXPECT_THROW(explained_variance_approx(make_block(Idx{0}, Idx{0}), es), ZeroTraceError);
}

TEST(RunPla, SampledBlockPopulation) {
  const DataMatrix data = gaussian_sample(worked_matrix(), 5000, 314);
  PlaConfig cfg;
  cfg.mode = Mode::kCorrelationRescaled;
  cfg.tau = 0.7;
  cfg.ev_cutoff = 0.1;
  const auto report = run_pla(data, cfg);
  ASSERT_EQ(report.partition.blocks.size(), 2u);
  EXPECT_TRUE(report.recommendation.empty());
  for (const auto& b : report.partition.blocks) {
    const double want = b.variables.size() == 2 ? 4.0 / 9.0 : 5.0 / 9.0;
    EXPECT_NEAR(b.ev_exact, want, 0.05);
    EXPECT_NEAR(b.ev_approx, want, 0.05);
  }
}

TEST(RunPla, SmallVarianceBlockRecommended) {
  Eigen::MatrixXd cov = worked_matrix();
  cov(2, 2) = 0.05;
  const DataMatrix data = gaussian_sample(cov, 5000, 2718);
  PlaConfig cfg;
  cfg.tau = 0.7;
  cfg.ev_cutoff = 0.1;
  const auto report = run_pla(data, cfg);
  EXPECT_EQ(report.recommendation, (std::vector<std::string>{"X3"}));
  for (const auto& b : report.partition.blocks) {
    if (b.variables == Idx{2}) {
      EXPECT_NEAR(b.ev_exact, 0.05 / 4.05, 0.003);
      EXPECT_NEAR(b.ev_approx, 0.05 / 4.05, 0.003);
    }
  }
}

TEST(RunPla, ScaleChangesCovarianceButNotCorrelationPartition) {
  const DataMatrix data = gaussian_sample(worked_matrix(), 5000, 99);
  Eigen::MatrixXd scaled = data.values();
  scaled.col(0) *= 1000.0;
  const DataMatrix big(scaled);

  PlaConfig cov_cfg;
  cov_cfg.mode = Mode::kCovariance;
  cov_cfg.tau = 0.3;
  const auto before = run_pla(data, cov_cfg).partition;
  const auto after = run_pla(big, cov_cfg).partition;
  EXPECT_FALSE(before.same_structure(after));

  PlaConfig cor_cfg;
  cor_cfg.mode = Mode::kCorrelation;
  cor_cfg.tau = 0.3;
  EXPECT_TRUE(run_pla(data, cor_cfg).partition.same_structure(run_pla(big, cor_cfg).partition));
}

TEST(RunPla, WorkedMatrixAllModes) {
  DispersionInput input;
  input.covariance.emplace(worked_matrix(), DispersionKind::kCovariance);
  input.correlation = correlation_from_covariance(*input.covariance);
  for (Mode mode : {Mode::kCovariance, Mode::kCorrelation, Mode::kCovarianceRescaled, Mode::kCorrelationRescaled}) {
    PlaConfig cfg;
    cfg.mode = mode;
    cfg.tau = 0.3;
    const auto report = run_pla(input, cfg);
    ASSERT_EQ(report.partition.blocks.size(), 2u) << to_string(mode);
    double total = 0.0;
    for (const auto& b : report.partition.blocks) {
      const double want = b.variables.size() == 2 ? 4.0 / 9.0 : 5.0 / 9.0;
      EXPECT_NEAR(b.ev_exact, want, 1e-9);
      EXPECT_NEAR(b.ev_approx, want, 1e-9);
      total += b.ev_approx;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(RunPla, CorrelationModeNeedsBothMatrices) {
  PlaConfig cfg;
  cfg.mode = Mode::kCorrelation;
  DispersionInput cov_only;
  cov_only.covariance.emplace(worked_matrix(), DispersionKind::kCovariance);
  EXPECT_THROW(run_pla(cov_only, cfg), InsufficientInputError);

  DispersionInput corr_only;
  corr_only.correlation = correlation_from_covariance(*cov_only.covariance);
  EXPECT_THROW(run_pla(corr_only, cfg), InsufficientInputError);
  cfg.mode = Mode::kCovariance;
  EXPECT_THROW(run_pla(corr_only, cfg), InsufficientInputError);
  EXPECT_NO_THROW(run_pla(cov_only, cfg));
}

TEST(RunPla, InvalidConfigRejected) {
  PlaConfig cfg;
  cfg.tau = 1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg.tau = 0.5;
  cfg.ev_cutoff = -0.1;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(RunPla, DegenerateSpectrumWarns) {
  DispersionInput input;
  input.covariance.emplace(Eigen::Matrix3d::Identity(), DispersionKind::kCovariance);
  PlaConfig cfg;
  cfg.mode = Mode::kCovariance;
  const auto report = run_pla(input, cfg);
  EXPECT_FALSE(report.warnings.empty());
}

TEST(RunPla, ZeroEigenvalueWarns) {
  DispersionInput input;
  Eigen::Matrix3d c = Eigen::Matrix3d::Zero();
  c(0, 0) = 2.0;
  c(1, 1) = 1.0;
  input.covariance.emplace(c, DispersionKind::kCovariance);
  PlaConfig cfg;
  cfg.mode = Mode::kCovariance;
  const auto report = run_pla(input, cfg);
  const bool zero_warning = std::any_of(report.warnings.begin(), report.warnings.end(), [](const std::string& w) {
    return w.find("exactly zero") != std::string::npos;
  });
  EXPECT_TRUE(zero_warning);
}

TEST(RunPla, CorrelationScaleInvarianceProperty) {
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> log_scale(0.0, std::log(1e4));
  for (int t = 0; t < 20; ++t) {
    const Eigen::MatrixXd c = oracle::random_block_diagonal(rng, {2, 1, 3});
    const DataMatrix data = gaussian_sample(c, 400, 1000 + t);
    Eigen::MatrixXd scaled = data.values();
    for (Eigen::Index j = 0; j < scaled.cols(); ++j) scaled.col(j) *= std::exp(log_scale(rng));
    PlaConfig cfg;
    cfg.mode = Mode::kCorrelationRescaled;
    EXPECT_TRUE(run_pla(data, cfg).partition.same_structure(run_pla(DataMatrix(scaled), cfg).partition));
  }
}

TEST(Discard, DropsRecommendedColumns) {
  Eigen::MatrixXd x(4, 3);
  x << 1, 2, 3, 4, 5, 6, 7, 8, 9, 1, 0, 1;
  const DataMatrix data(x);
  PlaReport report;
  report.variable_names = data.names();
  report.recommendation = {"X3"};
  const auto reduced = discard(data, report);
  EXPECT_EQ(reduced.names(), (std::vector<std::string>{"X1", "X2"}));
  EXPECT_EQ(reduced.values(), x.leftCols(2));

  report.recommendation.clear();
  EXPECT_EQ(discard(data, report), data);

  report.recommendation = {"X1", "X2", "X3"};
  EXPECT_THROW(discard(data, report), DimensionError);

  report.variable_names = {"a", "b", "c"};
  report.recommendation = {};
  EXPECT_THROW(discard(data, report), ConsistencyError);
}

}  // namespace
}  // namespace pla
