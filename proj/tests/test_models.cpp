#include "mcvi/derivative_check.hpp"
#include "mcvi/fd_oracle.hpp"
#include "mcvi/models/bnn.hpp"
#include "mcvi/models/frisk.hpp"
#include "mcvi/models/gaussian.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <filesystem>
#include <fstream>
#include <numbers>

using namespace mcvi;
using mcvi::testing::vec;

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

FriskDataset tiny_frisk() {
  FriskDataset d;
  d.ethnicities = 1;
  d.precincts = 1;
  d.stops = {1};
  d.arrests = {1};
  return d;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("mcvi_test_" + name);
}

}  // namespace

// Gaussian target

TEST(Gaussian, StandardNormalMode) {
  const GaussianModel m(vec({0}), Mat::Identity(1, 1));
  EXPECT_NEAR(m.log_density(vec({0})), -0.918939, 1e-6);
  EXPECT_NEAR(m.log_density(vec({0})), -kHalfLog2Pi, 1e-15);
}

TEST(Gaussian, StationaryAtMean) {
  const auto m = random_gaussian_model(4, 3);
  EXPECT_LT(m.gradient(m.mean()).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Gaussian, DiagonalHvp) {
  Mat p(2, 2);
  p << 2, 0, 0, 3;
  const GaussianModel m(vec({0.5, -1}), p);
  EXPECT_EQ(m.hvp(vec({9, 9}), vec({1, 1})), vec({-2, -3}));
}

TEST(Gaussian, LogDensityMatchesClosedForm) {
  const auto m = random_gaussian_model(5, 8);
  const Vec z = mcvi::testing::random_vec(8, 1, 5);
  const Vec r = z - m.mean();
  const double logdet = std::log(m.precision().determinant());
  const double expect = -0.5 * r.dot(m.precision() * r) - 5 * kHalfLog2Pi + 0.5 * logdet;
  EXPECT_NEAR(m.log_density(z), expect, 1e-10);
}

TEST(Gaussian, RejectsBadPrecision) {
  Mat asym(2, 2);
  asym << 1, 0.5, 0, 1;
  EXPECT_THROW(GaussianModel(vec({0, 0}), asym), std::invalid_argument);
  Mat indefinite(2, 2);
  indefinite << 1, 2, 2, 1;
  EXPECT_THROW(GaussianModel(vec({0, 0}), indefinite), std::invalid_argument);
  EXPECT_THROW(GaussianModel(vec({0}), Mat::Identity(2, 2)), std::invalid_argument);
}

TEST(Gaussian, HessianConstantAndLinearizationExact) {
  const auto m = random_gaussian_model(5, 2);
  const Vec z0 = mcvi::testing::random_vec(2, 1, 5);
  const Vec z1 = mcvi::testing::random_vec(2, 2, 5);
  EXPECT_EQ(m.full_hessian(z0), m.full_hessian(z1));
  const Vec linearized = m.gradient(z0) + m.hvp(z0, z1 - z0);
  EXPECT_LT(max_relative_error(m.gradient(z1), linearized), 1e-13);
}

// Frisk

TEST(Frisk, HandComputedLogDensity) {
  const FriskModel m(tiny_frisk());
  const double expect = -1.0 - 3.0 * (std::log(10.0) + kHalfLog2Pi) - 2.0 * kHalfLog2Pi;
  EXPECT_NEAR(m.log_density(Vec::Zero(5)), expect, 1e-12);
  EXPECT_NEAR(m.log_density(Vec::Zero(5)), -12.502448, 1e-6);
}

TEST(Frisk, DefaultShapeHasDim37) {
  const FriskModel m(generate_frisk_synthetic(3, 31, 0));
  EXPECT_EQ(m.dim(), 37u);
}

TEST(Frisk, MatchesReferenceImplementation) {
  const auto data = generate_frisk_synthetic(3, 31, 5);
  const FriskModel m(data);
  for (std::uint64_t i = 0; i < 10; ++i) {
    const Vec z = mcvi::testing::random_vec(5, i, m.dim(), 0.7);
    EXPECT_NEAR(m.log_density(z), mcvi::testing::frisk_logp_reference(data, z), 1e-8 * std::abs(m.log_density(z)));
  }
}

TEST(Frisk, GradientAndHvpMatchOracles) {
  const FriskModel m(generate_frisk_synthetic(3, 31, 1));
  DerivativeCheckConfig cfg;
  cfg.seed = 17;
  const auto res = check_derivatives(m, cfg);
  EXPECT_TRUE(res.passed) << (res.failures.empty() ? "" : res.failures.front());
  EXPECT_LE(res.max_dense_err, 1e-10);
}

TEST(Frisk, ConcaveInEffectsForFixedVariances) {
  const FriskModel m(generate_frisk_synthetic(3, 31, 2));
  std::vector<Eigen::Index> idx{FriskModel::kMu};
  for (Eigen::Index i = 3; i < static_cast<Eigen::Index>(m.dim()); ++i) idx.push_back(i);
  for (std::uint64_t t = 0; t < 10; ++t) {
    const Vec z = mcvi::testing::random_vec(2, t, m.dim(), 0.8);
    const Mat h = m.full_hessian(z)(idx, idx);
    const Eigen::SelfAdjointEigenSolver<Mat> es(h);
    EXPECT_LE(es.eigenvalues().maxCoeff(), 1e-8 * std::max(1.0, h.cwiseAbs().maxCoeff()));
  }
}

TEST(Frisk, OverflowIsModelError) {
  const FriskModel m(generate_frisk_synthetic(3, 31, 0));
  Vec z = Vec::Zero(m.dim());
  z[FriskModel::kMu] = 1000.0;
  EXPECT_THROW(m.log_density(z), ModelError);
  EXPECT_THROW(m.gradient(z), ModelError);
}

TEST(Frisk, RejectsWrongDimension) {
  const FriskModel m(generate_frisk_synthetic(3, 31, 0));
  EXPECT_THROW(m.log_density(Vec::Zero(5)), DimensionError);
}

TEST(FriskData, GeneratorIsDeterministic) {
  const auto a = generate_frisk_synthetic(3, 31, 1);
  const auto b = generate_frisk_synthetic(3, 31, 1);
  EXPECT_EQ(a.stops, b.stops);
  EXPECT_EQ(a.arrests, b.arrests);
  EXPECT_EQ(*a.truth, *b.truth);
  EXPECT_NE(a.stops, generate_frisk_synthetic(3, 31, 2).stops);
}

TEST(FriskData, SupportAndExposureRange) {
  const auto d = generate_frisk_synthetic(3, 31, 1);
  ASSERT_EQ(d.stops.size(), 93u);
  for (auto y : d.stops) EXPECT_GE(y, 0);
  for (auto n : d.arrests) {
    EXPECT_GE(n, 20);
    EXPECT_LE(n, 200);
  }
  EXPECT_DOUBLE_EQ(d.hyper_scale, 1.0);
}

// A loose sanity bound, not a guarantee: lognormal precinct effects can push
// the cell average well past it (seed 3 lands near 3x the upper edge).
TEST(FriskData, PooledRateNearDrawnOffset) {
  for (std::uint64_t seed : {1}) {
    const auto d = generate_frisk_synthetic(3, 31, seed);
    double ratio = 0.0;
    for (std::size_t i = 0; i < d.stops.size(); ++i)
      ratio += static_cast<double>(d.stops[i]) / static_cast<double>(d.arrests[i]);
    ratio /= static_cast<double>(d.stops.size());
    const double base = std::exp((*d.truth)[FriskModel::kMu]);
    EXPECT_GT(ratio, base / 5.0) << "seed " << seed;
    EXPECT_LT(ratio, base * 5.0) << "seed " << seed;
  }
}

TEST(FriskData, CsvRoundTrip) {
  const auto d = generate_frisk_synthetic(3, 7, 9);
  const auto path = temp_path("frisk.csv");
  write_frisk_csv(d, path);
  const auto back = read_frisk_csv(path);
  EXPECT_EQ(back.ethnicities, 3);
  EXPECT_EQ(back.precincts, 7);
  EXPECT_EQ(back.stops, d.stops);
  EXPECT_EQ(back.arrests, d.arrests);
  EXPECT_EQ(back.seed, std::optional<std::uint64_t>(9));
  EXPECT_DOUBLE_EQ(back.hyper_scale, 1.0);
  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  EXPECT_EQ(first.rfind("# seed=9", 0), 0u);
  std::filesystem::remove(path);
}

TEST(FriskData, RejectsInvalidCounts) {
  auto d = tiny_frisk();
  d.arrests = {0};
  EXPECT_THROW(d.validate(), DataError);
  d = tiny_frisk();
  d.stops = {-1};
  EXPECT_THROW(d.validate(), DataError);
  d = tiny_frisk();
  d.stops = {1, 2};
  EXPECT_THROW(d.validate(), DataError);
}

TEST(FriskData, RejectsIncompleteGrid) {
  const auto path = temp_path("bad_frisk.csv");
  {
    std::ofstream out(path);
    out << "ethnicity_index,precinct_index,arrests,stops\n0,0,10,2\n1,1,10,2\n";
  }
  EXPECT_THROW(read_frisk_csv(path), DataError);
  std::filesystem::remove(path);
}

// Regression data and BNN

TEST(RegressionData, StandardizedColumns) {
  const auto d = generate_regression_synthetic(100, 11, 1);
  for (Eigen::Index j = 0; j < d.x.cols(); ++j) {
    const auto col = d.x.col(j).array();
    EXPECT_NEAR(col.mean(), 0.0, 1e-8);
    EXPECT_NEAR((col - col.mean()).square().mean(), 1.0, 1e-8);
  }
  EXPECT_NEAR(d.y.mean(), 0.0, 1e-8);
  EXPECT_NEAR((d.y.array() - d.y.mean()).square().mean(), 1.0, 1e-8);
}

TEST(RegressionData, LoadsSemicolonCsvWithShuffle) {
  const auto path = temp_path("wine.csv");
  {
    std::ofstream out(path);
    out << "\"a\";\"b\";\"quality\"\n";
    for (int i = 0; i < 30; ++i) out << i << ';' << (i * i) % 7 << ';' << i % 5 << '\n';
  }
  const auto d = load_regression_csv(path, 20, 4);
  EXPECT_EQ(d.rows(), 20u);
  EXPECT_EQ(d.features(), 2u);
  EXPECT_EQ(d.feature_names, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(d.target_name, "quality");
  const auto again = load_regression_csv(path, 20, 4);
  EXPECT_EQ(d.x, again.x);
  EXPECT_NEAR(d.x.col(0).mean(), 0.0, 1e-12);
  std::filesystem::remove(path);
}

TEST(RegressionData, CommaCsvAndConstantColumn) {
  const auto path = temp_path("const.csv");
  {
    std::ofstream out(path);
    out << "a,b,y\n1,5,1\n2,5,2\n3,5,4\n";
  }
  EXPECT_THROW(load_regression_csv(path, 0, 0), DataError);
  std::filesystem::remove(path);
}

TEST(Bnn, WineShapeHas653Latents) {
  const BnnModel m(generate_regression_synthetic(100, 11, 0));
  EXPECT_EQ(m.dim(), 653u);
  EXPECT_FALSE(m.has_full_hessian());
  EXPECT_FALSE(m.has_hessian_diag());
  EXPECT_THROW(m.full_hessian(Vec::Zero(653)), CapabilityError);
}

TEST(Bnn, ZeroNetworkPredictsZero) {
  const BnnModel m(generate_regression_synthetic(50, 11, 0));
  EXPECT_EQ(m.predict(Vec::Zero(m.dim())), Vec::Zero(50));
}

TEST(Bnn, MatchesReferenceImplementation) {
  const auto data = generate_regression_synthetic(40, 4, 2);
  const BnnModel m(data, BnnConfig{.hidden = 7});
  for (std::uint64_t i = 0; i < 5; ++i) {
    const Vec z = mcvi::testing::random_vec(3, i, m.dim(), 0.5);
    const double ref = mcvi::testing::bnn_logp_reference(data, 7, z);
    EXPECT_NEAR(m.log_density(z), ref, 1e-10 * std::max(1.0, std::abs(ref)));
  }
}

TEST(Bnn, DerivativesMatchOraclesAtKinkFreePoints) {
  const BnnModel m(generate_regression_synthetic(100, 11, 1));
  DerivativeCheckConfig cfg;
  cfg.seed = 23;
  const auto res = check_derivatives(m, cfg);
  EXPECT_TRUE(res.passed) << (res.failures.empty() ? "" : res.failures.front());
}

TEST(Bnn, SmallNetworkOffersDenseDerivatives) {
  const BnnModel m(generate_regression_synthetic(30, 3, 1), BnnConfig{.hidden = 5});
  ASSERT_TRUE(m.has_full_hessian());
  DerivativeCheckConfig cfg;
  cfg.seed = 4;
  cfg.points = 5;
  const auto res = check_derivatives(m, cfg);
  EXPECT_TRUE(res.passed) << (res.failures.empty() ? "" : res.failures.front());
  EXPECT_LE(res.max_dense_err, 1e-10);
}

TEST(Bnn, LogDensityFallsAlongRays) {
  const BnnModel m(generate_regression_synthetic(100, 11, 1));
  const auto nw = static_cast<Eigen::Index>(m.num_weights());
  for (std::uint64_t r = 0; r < 5; ++r) {
    Vec dir = Vec::Zero(m.dim());
    dir.head(nw) = mcvi::testing::random_vec(31, r, m.num_weights());
    dir /= dir.norm();
    EXPECT_LT(m.log_density(1e3 * dir), m.log_density(dir)) << "ray " << r;
  }
}

TEST(Bnn, HvpSymmetric) {
  const BnnModel m(generate_regression_synthetic(60, 11, 1));
  const Vec z = mcvi::testing::random_vec(6, 0, m.dim(), 0.3);
  const Vec u = mcvi::testing::random_vec(6, 1, m.dim());
  const Vec v = mcvi::testing::random_vec(6, 2, m.dim());
  const auto prep = m.prepare(z);
  EXPECT_LT(relative_error(u.dot(prep->hvp(v)), v.dot(prep->hvp(u))), 1e-8);
}

TEST(Models, EvaluationIsDeterministic) {
  const BnnModel bnn(generate_regression_synthetic(60, 11, 1));
  const FriskModel frisk(generate_frisk_synthetic(3, 31, 1));
  for (const LogDensityModel* m : {static_cast<const LogDensityModel*>(&bnn), static_cast<const LogDensityModel*>(&frisk)}) {
    const Vec z = mcvi::testing::random_vec(12, 0, m->dim(), 0.3);
    const Vec v = mcvi::testing::random_vec(12, 1, m->dim());
    EXPECT_EQ(m->log_density(z), m->log_density(z));
    EXPECT_EQ(m->gradient(z), m->gradient(z));
    EXPECT_EQ(m->hvp(z, v), m->hvp(z, v));
  }
}
