#ifndef VERISCOPE_SVM_H_
#define VERISCOPE_SVM_H_

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "veriscope/label.h"

namespace veriscope {

struct SvmConfig {
  double c = 16.0;
  double gamma = 0.01;
  double tolerance = 1e-3;  // KKT violation allowed at convergence
  int max_passes = 50;      // full sweeps over the data before giving up
  std::uint64_t seed = 1;

  void Validate() const;
};

double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma);

// Per-feature z-scoring with training statistics. Constant features are
// dropped and their indices recorded.
struct Standardizer {
  std::size_t input_dim = 0;
  std::vector<std::size_t> kept;
  std::vector<std::size_t> dropped;
  std::vector<double> mean;    // per kept feature
  std::vector<double> stddev;  // population standard deviation, > 0

  std::vector<double> Apply(std::span<const double> row) const;
  std::size_t output_dim() const { return kept.size(); }
};

Standardizer standardize_fit(std::span<const std::vector<double>> rows);
std::vector<std::vector<double>> standardize_apply(const Standardizer& stats,
                                                   std::span<const std::vector<double>> rows);

// Solution of the soft-margin dual
//   max sum(a) - 1/2 sum_ij a_i a_j y_i y_j K_ij  s.t. 0 <= a <= C, sum(a y) = 0.
struct DualSolution {
  std::vector<double> alpha;
  double bias = 0.0;
  double objective = 0.0;
  int iterations = 0;  // successful pair updates
  bool converged = false;
};

double dual_objective(const Eigen::MatrixXd& kernel, std::span<const int> y,
                      std::span<const double> alpha);

// Bias from KKT conditions: mean over free vectors, or the midpoint of the
// feasible interval when every multiplier sits at a bound.
double kkt_bias(const Eigen::MatrixXd& kernel, std::span<const int> y,
                std::span<const double> alpha, double c);

// Platt's SMO with an error cache and the max |E1 - E2| second-choice
// heuristic. Sweep order and fallback start points come from the seed.
DualSolution smo_solve(const Eigen::MatrixXd& kernel, std::span<const int> y, double c,
                       double tolerance, int max_passes, std::uint64_t seed);

Eigen::MatrixXd rbf_kernel_matrix(std::span<const std::vector<double>> rows, double gamma);

struct SvmModel {
  std::vector<std::vector<double>> support_vectors;  // standardized
  std::vector<double> coef;                          // alpha_i * y_i
  double bias = 0.0;
  SvmConfig config;
  Standardizer scaling;
  double dual_objective = 0.0;
  bool converged = false;
};

// Trains on rows (raw features) with labels. Rows are put in a canonical
// order first, so the result does not depend on the order of the input.
// Throws kInvalidArgument unless both classes are present.
SvmModel svm_train_smo(std::span<const std::vector<double>> rows,
                       std::span<const Label> labels, const SvmConfig& config);

// sum_i coef_i K(sv_i, standardized x) + bias; positive means true.
double svm_decision(const SvmModel& model, std::span<const double> x);
inline Label svm_predict(const SvmModel& model, std::span<const double> x) {
  return svm_decision(model, x) > 0.0 ? Label::kTrue : Label::kFalse;
}

struct SvmGrid {
  std::vector<double> c_values;
  std::vector<double> gamma_values;

  // C in 2^-2..2^6, gamma in 2^-8..2^2.
  static SvmGrid Default();
};

struct GridCell {
  double c = 0.0;
  double gamma = 0.0;
  double mean_accuracy = 0.0;
  std::vector<double> fold_accuracy;
};

struct GridSearchResult {
  SvmConfig best;
  std::vector<GridCell> cells;  // ordered by C, then gamma
};

// Stratified k-fold CV over the grid. Highest mean accuracy wins; ties go to
// the smaller C, then the smaller gamma. Throws kInvalidArgument when a class
// has fewer examples than folds.
GridSearchResult grid_search_cv(std::span<const std::vector<double>> rows,
                                std::span<const Label> labels, const SvmGrid& grid,
                                std::size_t folds, std::uint64_t seed,
                                const SvmConfig& base = {});

void write_grid_csv(std::ostream& out, const GridSearchResult& result);

std::string SaveSvmModel(const SvmModel& model);
SvmModel LoadSvmModel(std::string_view json);

}  // namespace veriscope

#endif  // VERISCOPE_SVM_H_
