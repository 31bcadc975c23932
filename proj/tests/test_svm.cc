#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "oracles.h"
#include "test_util.h"
#include "veriscope/rng.h"
#include "veriscope/svm.h"

namespace veriscope {
namespace {

using testing::CodeOf;
using Rows = std::vector<std::vector<double>>;

struct Toy {
  Rows rows;
  std::vector<Label> labels;
};

// Two Gaussian-ish clusters around (+-spread, +-spread).
Toy Clusters(std::size_t per_class, double spread, Rng& rng) {
  Toy t;
  for (std::size_t i = 0; i < 2 * per_class; ++i) {
    const bool pos = i % 2 == 1;
    const double centre = pos ? spread : -spread;
    t.rows.push_back({centre + rng.Uniform(-1, 1), centre + rng.Uniform(-1, 1)});
    t.labels.push_back(pos ? Label::kTrue : Label::kFalse);
  }
  return t;
}

std::vector<int> Signs(const std::vector<Label>& labels) {
  std::vector<int> y;
  for (Label l : labels) y.push_back(LabelSign(l));
  return y;
}

TEST_CASE("rbf_kernel") {
  const std::vector<double> x = {1, 2}, y = {1, 3};
  CHECK(rbf_kernel(x, x, 0.5) == 1.0);
  CHECK(rbf_kernel(x, y, 0.01) == doctest::Approx(0.990050).epsilon(1e-6));
  double prev = 1.0;
  for (double g : {0.1, 1.0, 10.0, 100.0}) {
    const double k = rbf_kernel(x, y, g);
    CHECK(k < prev);
    prev = k;
  }
  CHECK(prev < 1e-40);
  const std::vector<double> z = {1, 2, 3};
  CHECK(CodeOf([&] { rbf_kernel(x, z, 1.0); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("standardization") {
  const Rows rows = {{0, 5, 1}, {2, 5, 3}};
  const Standardizer s = standardize_fit(rows);
  CHECK(s.dropped == std::vector<std::size_t>{1});
  CHECK(s.kept == std::vector<std::size_t>{0, 2});
  const Rows out = standardize_apply(s, rows);
  CHECK(out[0] == std::vector<double>{-1, -1});
  CHECK(out[1] == std::vector<double>{1, 1});

  Rng rng(4);
  Rows wide;
  for (int i = 0; i < 30; ++i) wide.push_back({rng.Uniform(-5, 9), rng.Uniform(0, 1) * 100});
  const Rows z = standardize_apply(standardize_fit(wide), wide);
  for (std::size_t k = 0; k < 2; ++k) {
    double mean = 0;
    for (const auto& r : z) mean += r[k];
    CHECK(std::abs(mean / 30) < 1e-9);
  }
}

TEST_CASE("two opposite points") {
  const Rows rows = {{0, 0}, {2, 2}};
  const std::vector<Label> labels = {Label::kFalse, Label::kTrue};
  SvmConfig config;
  config.c = 10;
  config.gamma = 0.5;
  const SvmModel m = svm_train_smo(rows, labels, config);
  CHECK(m.support_vectors.size() == 2);
  CHECK(std::abs(svm_decision(m, std::vector<double>{1, 1})) < 1e-6);
  CHECK(svm_predict(m, rows[0]) == Label::kFalse);
  CHECK(svm_predict(m, rows[1]) == Label::kTrue);
}

TEST_CASE("xor") {
  const Rows rows = {{0, 0}, {1, 1}, {0, 1}, {1, 0}};
  const std::vector<Label> labels = {Label::kFalse, Label::kFalse, Label::kTrue, Label::kTrue};
  SvmConfig config;
  config.c = 10;
  config.gamma = 1;
  const SvmModel m = svm_train_smo(rows, labels, config);
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(svm_predict(m, rows[i]) == labels[i]);
}

Toy Twice(const Toy& t) {
  Toy out = t;
  out.rows.insert(out.rows.end(), t.rows.begin(), t.rows.end());
  out.labels.insert(out.labels.end(), t.labels.begin(), t.labels.end());
  return out;
}

double GridAgreement(const SvmModel& a, const SvmModel& b) {
  int agree = 0, total = 0;
  for (double x = -4; x <= 4; x += 0.25) {
    for (double y = -4; y <= 4; y += 0.25) {
      const std::vector<double> p = {x, y};
      agree += svm_predict(a, p) == svm_predict(b, p);
      ++total;
    }
  }
  return static_cast<double>(agree) / total;
}

TEST_CASE("duplicated data") {
  Rng rng(9);
  SvmConfig config;
  config.gamma = 0.5;

  // Separable data: no multiplier reaches C, so doubling every point only
  // splits each multiplier between the two copies.
  config.c = 1000;
  const Toy sep = Clusters(8, 3.0, rng);
  CHECK(GridAgreement(svm_train_smo(sep.rows, sep.labels, config),
                      svm_train_smo(Twice(sep).rows, Twice(sep).labels, config)) >= 0.98);

  // In general the doubled problem is the original one with C doubled.
  config.c = 1.5;
  const Toy mixed = Clusters(8, 0.4, rng);
  SvmConfig wide = config;
  wide.c = 3.0;
  CHECK(GridAgreement(svm_train_smo(mixed.rows, mixed.labels, wide),
                      svm_train_smo(Twice(mixed).rows, Twice(mixed).labels, config)) >= 0.98);
}

TEST_CASE("permutations and free support vectors") {
  Rng rng(10);
  Toy t = Clusters(8, 0.6, rng);
  SvmConfig config;
  config.c = 2;
  config.gamma = 0.7;
  const SvmModel base = svm_train_smo(t.rows, t.labels, config);

  std::vector<std::size_t> order(t.rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.Shuffle(std::span<std::size_t>(order));
  Toy shuffled;
  for (std::size_t i : order) {
    shuffled.rows.push_back(t.rows[i]);
    shuffled.labels.push_back(t.labels[i]);
  }
  const SvmModel permuted = svm_train_smo(shuffled.rows, shuffled.labels, config);

  for (double x = -3; x <= 3; x += 0.5) {
    for (double y = -3; y <= 3; y += 0.5) {
      const std::vector<double> p = {x, y};
      CHECK(svm_decision(base, p) == svm_decision(permuted, p));
    }
  }

  // Free support vectors sit on the margin.
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const auto z = base.scaling.Apply(t.rows[i]);
    for (std::size_t s = 0; s < base.support_vectors.size(); ++s) {
      if (base.support_vectors[s] != z) continue;
      const double alpha = std::abs(base.coef[s]);
      if (alpha < config.c * (1 - 1e-6)) {
        CHECK(std::abs(svm_decision(base, t.rows[i]) - LabelSign(t.labels[i])) <=
              config.tolerance);
      }
    }
  }

  double sum = 0;
  for (std::size_t s = 0; s < base.coef.size(); ++s) {
    CHECK(std::abs(base.coef[s]) > 0);
    CHECK(std::abs(base.coef[s]) <= config.c);
    sum += base.coef[s];
  }
  CHECK(std::abs(sum) <= 1e-8);

  CHECK(CodeOf([&] {
          svm_train_smo(t.rows, std::vector<Label>(t.rows.size(), Label::kTrue), config);
        }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("degenerate model decides by its bias") {
  SvmModel m;
  m.bias = 0.3;
  m.scaling.input_dim = 2;
  m.scaling.kept = {0, 1};
  m.scaling.mean = {0, 0};
  m.scaling.stddev = {1, 1};
  CHECK(svm_decision(m, std::vector<double>{4, -2}) == 0.3);
  CHECK(CodeOf([&] { svm_decision(m, std::vector<double>{1}); }) ==
        ErrorCode::kInvalidArgument);
}

TEST_CASE("kernel matrix is symmetric positive semi-definite") {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    Rows rows;
    const std::size_t n = 2 + rng.Below(20);
    for (std::size_t i = 0; i < n; ++i) rows.push_back({rng.Uniform(-2, 2), rng.Uniform(-2, 2)});
    const Eigen::MatrixXd k = rbf_kernel_matrix(rows, rng.Uniform(0.01, 5));
    CHECK((k - k.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(k).eigenvalues().minCoeff() >= -1e-8);
  }
}

TEST_CASE("smo matches the projected-gradient oracle") {
  Rng rng(31);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = 2 + rng.Below(11);
    Rows rows;
    std::vector<int> y;
    for (std::size_t i = 0; i < n; ++i) {
      rows.push_back({rng.Uniform(-2, 2), rng.Uniform(-2, 2)});
      y.push_back(i < 1 ? -1 : (i < 2 ? 1 : (rng.Below(2) ? 1 : -1)));
    }
    const double c = rng.Uniform(0.5, 10), gamma = rng.Uniform(0.1, 2);
    const Eigen::MatrixXd k = rbf_kernel_matrix(rows, gamma);
    const DualSolution smo = smo_solve(k, y, c, 1e-3, 50, 1);
    Eigen::VectorXd ye(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) ye(static_cast<Eigen::Index>(i)) = y[i];
    const oracle::DualSolution ref = oracle::SolveDual(k, ye, c);
    CHECK(smo.objective >= ref.objective - 1e-3);
    CHECK(smo.objective == doctest::Approx(dual_objective(k, y, smo.alpha)).epsilon(1e-12));
    double balance = 0;
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(smo.alpha[i] >= 0);
      CHECK(smo.alpha[i] <= c);
      balance += smo.alpha[i] * y[i];
    }
    CHECK(std::abs(balance) <= 1e-8);
  }
}

TEST_CASE("grid search") {
  Rng rng(40);
  const Toy t = Clusters(10, 3.0, rng);

  SvmGrid single{{4.0}, {0.5}};
  const auto one = grid_search_cv(t.rows, t.labels, single, 5, 1);
  CHECK(one.best.c == 4.0);
  CHECK(one.best.gamma == 0.5);
  REQUIRE(one.cells.size() == 1);
  CHECK(one.cells[0].fold_accuracy.size() == 5);

  SvmGrid tie{{2.0, 1.0}, {0.5}};
  const auto tied = grid_search_cv(t.rows, t.labels, tie, 5, 1);
  CHECK(tied.cells[0].mean_accuracy == tied.cells[1].mean_accuracy);
  CHECK(tied.best.c == 1.0);

  const auto full = grid_search_cv(t.rows, t.labels, SvmGrid::Default(), 5, 1);
  CHECK(full.cells.size() == 9 * 11);
  double best = 0;
  for (const GridCell& cell : full.cells) best = std::max(best, cell.mean_accuracy);
  CHECK(best == 1.0);
  for (const GridCell& cell : full.cells) {
    if (cell.mean_accuracy == best) {
      CHECK(cell.c == full.best.c);
      CHECK(cell.gamma == full.best.gamma);
      break;
    }
  }
  std::ostringstream csv;
  write_grid_csv(csv, full);
  CHECK(csv.str().rfind("c,gamma,mean_accuracy,fold1", 0) == 0);

  Toy small = Clusters(3, 3.0, rng);
  CHECK(CodeOf([&] { grid_search_cv(small.rows, small.labels, single, 5, 1); }) ==
        ErrorCode::kInvalidArgument);
}

TEST_CASE("svm checkpoint round trip") {
  Rng rng(50);
  const Toy t = Clusters(12, 0.8, rng);
  SvmConfig config;
  config.c = 3;
  config.gamma = 0.3;
  const SvmModel m = svm_train_smo(t.rows, t.labels, config);
  const SvmModel back = LoadSvmModel(SaveSvmModel(m));
  CHECK(SaveSvmModel(back) == SaveSvmModel(m));
  for (int i = 0; i < 50; ++i) {
    const std::vector<double> p = {rng.Uniform(-3, 3), rng.Uniform(-3, 3)};
    CHECK(svm_decision(m, p) == svm_decision(back, p));
  }
}

}  // namespace
}  // namespace veriscope
