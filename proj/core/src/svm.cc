#include "veriscope/svm.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "json.hpp"
#include "veriscope/error.h"
#include "veriscope/rng.h"

namespace veriscope {

using Eigen::MatrixXd;

namespace {

constexpr double kStepEpsilon = 1e-12;

double SquaredDistance(std::span<const double> x, std::span<const double> y) {
  double sum = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double d = x[k] - y[k];
    sum += d * d;
  }
  return sum;
}

std::vector<int> Signs(std::span<const Label> labels) {
  std::vector<int> y;
  y.reserve(labels.size());
  for (Label l : labels) y.push_back(LabelSign(l));
  return y;
}

void RequireBothClasses(std::span<const int> y) {
  const bool pos = std::find(y.begin(), y.end(), 1) != y.end();
  const bool neg = std::find(y.begin(), y.end(), -1) != y.end();
  if (!pos || !neg) ThrowInvalid("SVM training needs examples of both classes");
}

class SmoSolver {
 public:
  SmoSolver(const MatrixXd& kernel, std::span<const int> y, double c, double tol,
            std::uint64_t seed)
      : k_(kernel), y_(y), c_(c), tol_(tol), rng_(seed), n_(y.size()),
        alpha_(n_, 0.0), error_(n_) {
    // With every alpha at zero and b = 0, f(x) = 0 so E_i = -y_i.
    for (std::size_t i = 0; i < n_; ++i) error_[i] = -y_[i];
  }

  DualSolution Run(int max_passes) {
    std::vector<std::size_t> order(n_);
    std::iota(order.begin(), order.end(), 0);
    rng_.Shuffle(std::span<std::size_t>(order));

    bool examine_all = true;
    int full_sweeps = 0;
    bool converged = false;
    const long step_limit = 200000L * static_cast<long>(std::max<std::size_t>(n_, 1));
    for (;;) {
      int changed = 0;
      if (examine_all) {
        if (full_sweeps >= max_passes) break;
        ++full_sweeps;
        for (std::size_t i : order) changed += Examine(i);
      } else {
        for (std::size_t i : order) {
          if (Free(i)) changed += Examine(i);
        }
      }
      if (examine_all) {
        if (changed == 0) {
          converged = true;
          break;
        }
        examine_all = false;
      } else if (changed == 0) {
        examine_all = true;
      }
      if (steps_ > step_limit) break;
    }

    DualSolution s;
    s.alpha = alpha_;
    s.bias = kkt_bias(k_, y_, alpha_, c_);
    s.objective = dual_objective(k_, y_, alpha_);
    s.iterations = static_cast<int>(steps_);
    s.converged = converged;
    return s;
  }

 private:
  bool Free(std::size_t i) const { return alpha_[i] > 0.0 && alpha_[i] < c_; }

  int Examine(std::size_t i2) {
    const double r2 = error_[i2] * y_[i2];
    if (!((r2 < -tol_ && alpha_[i2] < c_) || (r2 > tol_ && alpha_[i2] > 0.0))) return 0;

    // Second choice: the free multiplier with the largest |E1 - E2|.
    std::size_t best = n_;
    double best_gap = -1.0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (!Free(i) || i == i2) continue;
      const double gap = std::abs(error_[i] - error_[i2]);
      if (gap > best_gap) {
        best_gap = gap;
        best = i;
      }
    }
    if (best < n_ && TakeStep(best, i2)) return 1;

    const std::size_t start_free = n_ ? static_cast<std::size_t>(rng_.Below(n_)) : 0;
    for (std::size_t k = 0; k < n_; ++k) {
      const std::size_t i1 = (start_free + k) % n_;
      if (Free(i1) && TakeStep(i1, i2)) return 1;
    }
    const std::size_t start_all = static_cast<std::size_t>(rng_.Below(n_));
    for (std::size_t k = 0; k < n_; ++k) {
      const std::size_t i1 = (start_all + k) % n_;
      if (TakeStep(i1, i2)) return 1;
    }
    return 0;
  }

  // Objective restricted to moving alpha2 to `a2` (alpha1 follows).
  double PairObjective(std::size_t i1, std::size_t i2, double a2) const {
    const double s = y_[i1] * y_[i2];
    const double a1 = alpha_[i1] + s * (alpha_[i2] - a2);
    std::vector<double> trial = alpha_;
    trial[i1] = a1;
    trial[i2] = a2;
    return dual_objective(k_, y_, trial);
  }

  bool TakeStep(std::size_t i1, std::size_t i2) {
    if (i1 == i2) return false;
    const double a1 = alpha_[i1];
    const double a2 = alpha_[i2];
    const int y1 = y_[i1];
    const int y2 = y_[i2];
    const double e1 = error_[i1];
    const double e2 = error_[i2];
    const double s = y1 * y2;
    double lo, hi;
    if (y1 != y2) {
      lo = std::max(0.0, a2 - a1);
      hi = std::min(c_, c_ + a2 - a1);
    } else {
      lo = std::max(0.0, a1 + a2 - c_);
      hi = std::min(c_, a1 + a2);
    }
    if (hi - lo <= kStepEpsilon) return false;

    const double k11 = k_(i1, i1);
    const double k12 = k_(i1, i2);
    const double k22 = k_(i2, i2);
    const double eta = k11 + k22 - 2.0 * k12;
    double a2_new;
    if (eta > kStepEpsilon) {
      a2_new = std::clamp(a2 + y2 * (e1 - e2) / eta, lo, hi);
    } else {
      const double obj_lo = PairObjective(i1, i2, lo);
      const double obj_hi = PairObjective(i1, i2, hi);
      if (obj_lo > obj_hi + kStepEpsilon) {
        a2_new = lo;
      } else if (obj_hi > obj_lo + kStepEpsilon) {
        a2_new = hi;
      } else {
        a2_new = a2;
      }
    }
    if (a2_new < kStepEpsilon) a2_new = 0.0;
    if (a2_new > c_ - kStepEpsilon) a2_new = c_;
    if (std::abs(a2_new - a2) < kStepEpsilon * (a2_new + a2 + kStepEpsilon)) return false;

    double a1_new = a1 + s * (a2 - a2_new);
    if (a1_new < kStepEpsilon) a1_new = 0.0;
    if (a1_new > c_ - kStepEpsilon) a1_new = c_;

    const double d1 = y1 * (a1_new - a1);
    const double d2 = y2 * (a2_new - a2);
    const double b1 = bias_ - e1 - d1 * k11 - d2 * k12;
    const double b2 = bias_ - e2 - d1 * k12 - d2 * k22;
    double b_new;
    if (a1_new > 0.0 && a1_new < c_) {
      b_new = b1;
    } else if (a2_new > 0.0 && a2_new < c_) {
      b_new = b2;
    } else {
      b_new = 0.5 * (b1 + b2);
    }
    const double db = b_new - bias_;
    for (std::size_t i = 0; i < n_; ++i) {
      error_[i] += d1 * k_(i1, i) + d2 * k_(i2, i) + db;
    }
    alpha_[i1] = a1_new;
    alpha_[i2] = a2_new;
    bias_ = b_new;
    ++steps_;
    return true;
  }

  const MatrixXd& k_;
  std::span<const int> y_;
  double c_;
  double tol_;
  Rng rng_;
  std::size_t n_;
  std::vector<double> alpha_;
  std::vector<double> error_;
  double bias_ = 0.0;
  long steps_ = 0;
};

// Row order that depends only on the multiset of (row, label) pairs.
std::vector<std::size_t> CanonicalOrder(std::span<const std::vector<double>> rows,
                                        std::span<const Label> labels) {
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (rows[a] != rows[b]) return rows[a] < rows[b];
    return LabelIndex(labels[a]) < LabelIndex(labels[b]);
  });
  return order;
}

}  // namespace

void SvmConfig::Validate() const {
  if (!(c > 0.0) || !(gamma > 0.0)) ThrowInvalid("SVM needs C > 0 and gamma > 0");
  if (!(tolerance > 0.0) || max_passes <= 0) ThrowInvalid("SVM tolerance and passes must be positive");
}

double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma) {
  if (x.size() != y.size()) ThrowInvalid("rbf_kernel: dimension mismatch");
  return std::exp(-gamma * SquaredDistance(x, y));
}

std::vector<double> Standardizer::Apply(std::span<const double> row) const {
  if (row.size() != input_dim) {
    ThrowInvalid("expected " + std::to_string(input_dim) + " features, got " +
                 std::to_string(row.size()));
  }
  std::vector<double> out(kept.size());
  for (std::size_t k = 0; k < kept.size(); ++k) {
    out[k] = (row[kept[k]] - mean[k]) / stddev[k];
  }
  return out;
}

Standardizer standardize_fit(std::span<const std::vector<double>> rows) {
  if (rows.size() < 2) ThrowInvalid("standardize_fit needs at least two rows");
  Standardizer s;
  s.input_dim = rows[0].size();
  const double n = static_cast<double>(rows.size());
  for (std::size_t j = 0; j < s.input_dim; ++j) {
    double sum = 0.0;
    for (const auto& r : rows) {
      if (r.size() != s.input_dim) ThrowInvalid("rows differ in width");
      sum += r[j];
    }
    const double mean = sum / n;
    double sq = 0.0;
    for (const auto& r : rows) sq += (r[j] - mean) * (r[j] - mean);
    const double sd = std::sqrt(sq / n);
    if (sd > 1e-12 * std::max(1.0, std::abs(mean))) {
      s.kept.push_back(j);
      s.mean.push_back(mean);
      s.stddev.push_back(sd);
    } else {
      s.dropped.push_back(j);
    }
  }
  return s;
}

std::vector<std::vector<double>> standardize_apply(const Standardizer& stats,
                                                   std::span<const std::vector<double>> rows) {
  std::vector<std::vector<double>> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(stats.Apply(r));
  return out;
}

double dual_objective(const MatrixXd& kernel, std::span<const int> y,
                      std::span<const double> alpha) {
  double linear = 0.0;
  double quad = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    linear += alpha[i];
    if (alpha[i] == 0.0) continue;
    for (std::size_t j = 0; j < alpha.size(); ++j) {
      if (alpha[j] == 0.0) continue;
      quad += alpha[i] * alpha[j] * y[i] * y[j] * kernel(i, j);
    }
  }
  return linear - 0.5 * quad;
}

double kkt_bias(const MatrixXd& kernel, std::span<const int> y, std::span<const double> alpha,
                double c) {
  const std::size_t n = alpha.size();
  double free_sum = 0.0;
  std::size_t free_count = 0;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    double g = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (alpha[j] != 0.0) g += alpha[j] * y[j] * kernel(i, j);
    }
    const double target = y[i] - g;  // the bias that puts x_i on its margin
    if (alpha[i] > 0.0 && alpha[i] < c) {
      free_sum += target;
      ++free_count;
    } else if ((y[i] > 0) == (alpha[i] == 0.0)) {
      lower = std::max(lower, target);  // needs y f >= 1 (or <= 1 at C)
    } else {
      upper = std::min(upper, target);
    }
  }
  if (free_count > 0) return free_sum / static_cast<double>(free_count);
  if (std::isinf(lower) && std::isinf(upper)) return 0.0;
  if (std::isinf(lower)) return upper;
  if (std::isinf(upper)) return lower;
  return 0.5 * (lower + upper);
}

DualSolution smo_solve(const MatrixXd& kernel, std::span<const int> y, double c,
                       double tolerance, int max_passes, std::uint64_t seed) {
  if (kernel.rows() != kernel.cols() || static_cast<std::size_t>(kernel.rows()) != y.size()) {
    ThrowInvalid("smo_solve: kernel and label sizes differ");
  }
  RequireBothClasses(y);
  SmoSolver solver(kernel, y, c, tolerance, seed);
  return solver.Run(max_passes);
}

MatrixXd rbf_kernel_matrix(std::span<const std::vector<double>> rows, double gamma) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      k(i, j) = k(j, i) = rbf_kernel(rows[i], rows[j], gamma);
    }
  }
  return k;
}

SvmModel svm_train_smo(std::span<const std::vector<double>> rows,
                       std::span<const Label> labels, const SvmConfig& config) {
  config.Validate();
  if (rows.size() != labels.size()) ThrowInvalid("rows and labels differ in length");
  RequireBothClasses(Signs(labels));

  const std::vector<std::size_t> order = CanonicalOrder(rows, labels);
  std::vector<std::vector<double>> sorted;
  std::vector<Label> sorted_labels;
  for (std::size_t i : order) {
    sorted.push_back(rows[i]);
    sorted_labels.push_back(labels[i]);
  }

  SvmModel model;
  model.config = config;
  model.scaling = standardize_fit(sorted);
  const auto x = standardize_apply(model.scaling, sorted);
  const std::vector<int> y = Signs(sorted_labels);
  const MatrixXd k = rbf_kernel_matrix(x, config.gamma);
  const DualSolution sol = smo_solve(k, y, config.c, config.tolerance, config.max_passes,
                                     config.seed);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (sol.alpha[i] > 0.0) {
      model.support_vectors.push_back(x[i]);
      model.coef.push_back(sol.alpha[i] * y[i]);
    }
  }
  model.bias = sol.bias;
  model.dual_objective = sol.objective;
  model.converged = sol.converged;
  return model;
}

double svm_decision(const SvmModel& model, std::span<const double> x) {
  const std::vector<double> z = model.scaling.Apply(x);
  double f = model.bias;
  for (std::size_t i = 0; i < model.support_vectors.size(); ++i) {
    f += model.coef[i] * rbf_kernel(model.support_vectors[i], z, model.config.gamma);
  }
  return f;
}

SvmGrid SvmGrid::Default() {
  SvmGrid grid;
  for (int p = -2; p <= 6; ++p) grid.c_values.push_back(std::ldexp(1.0, p));
  for (int p = -8; p <= 2; ++p) grid.gamma_values.push_back(std::ldexp(1.0, p));
  return grid;
}

GridSearchResult grid_search_cv(std::span<const std::vector<double>> rows,
                                std::span<const Label> labels, const SvmGrid& grid,
                                std::size_t folds, std::uint64_t seed, const SvmConfig& base) {
  if (rows.size() != labels.size()) ThrowInvalid("rows and labels differ in length");
  if (folds < 2) ThrowInvalid("cross-validation needs at least two folds");
  if (grid.c_values.empty() || grid.gamma_values.empty()) ThrowInvalid("empty grid");

  // Stratified assignment: shuffle each class, deal round-robin.
  std::vector<std::size_t> fold_of(rows.size());
  Rng rng(seed);
  for (Label cls : {Label::kFalse, Label::kTrue}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == cls) members.push_back(i);
    }
    if (members.size() < folds) {
      ThrowInvalid("class '" + std::string(LabelName(cls)) + "' has " +
                   std::to_string(members.size()) + " examples, fewer than " +
                   std::to_string(folds) + " folds");
    }
    rng.Shuffle(std::span<std::size_t>(members));
    for (std::size_t k = 0; k < members.size(); ++k) fold_of[members[k]] = k % folds;
  }

  struct Fold {
    std::vector<std::vector<double>> train_rows;
    std::vector<Label> train_labels;
    std::vector<std::vector<double>> test_rows;
    std::vector<Label> test_labels;
  };
  std::vector<Fold> splits(folds);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t f = 0; f < folds; ++f) {
      Fold& fold = splits[f];
      if (fold_of[i] == f) {
        fold.test_rows.push_back(rows[i]);
        fold.test_labels.push_back(labels[i]);
      } else {
        fold.train_rows.push_back(rows[i]);
        fold.train_labels.push_back(labels[i]);
      }
    }
  }

  std::vector<double> cs = grid.c_values;
  std::vector<double> gammas = grid.gamma_values;
  std::sort(cs.begin(), cs.end());
  std::sort(gammas.begin(), gammas.end());

  GridSearchResult result;
  double best = -1.0;
  for (double c : cs) {
    for (double gamma : gammas) {
      GridCell cell;
      cell.c = c;
      cell.gamma = gamma;
      SvmConfig config = base;
      config.c = c;
      config.gamma = gamma;
      double sum = 0.0;
      for (const Fold& fold : splits) {
        const SvmModel model = svm_train_smo(fold.train_rows, fold.train_labels, config);
        std::size_t correct = 0;
        for (std::size_t t = 0; t < fold.test_rows.size(); ++t) {
          if (svm_predict(model, fold.test_rows[t]) == fold.test_labels[t]) ++correct;
        }
        const double acc = static_cast<double>(correct) /
                           static_cast<double>(fold.test_rows.size());
        cell.fold_accuracy.push_back(acc);
        sum += acc;
      }
      cell.mean_accuracy = sum / static_cast<double>(folds);
      if (cell.mean_accuracy > best) {
        best = cell.mean_accuracy;
        result.best = config;
      }
      result.cells.push_back(std::move(cell));
    }
  }
  return result;
}

void write_grid_csv(std::ostream& out, const GridSearchResult& result) {
  out << "c,gamma,mean_accuracy";
  const std::size_t folds = result.cells.empty() ? 0 : result.cells[0].fold_accuracy.size();
  for (std::size_t f = 0; f < folds; ++f) out << ",fold" << (f + 1);
  out << '\n';
  char buf[64];
  for (const GridCell& cell : result.cells) {
    std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.6f", cell.c, cell.gamma, cell.mean_accuracy);
    out << buf;
    for (double acc : cell.fold_accuracy) {
      std::snprintf(buf, sizeof buf, ",%.6f", acc);
      out << buf;
    }
    out << '\n';
  }
}

std::string SaveSvmModel(const SvmModel& model) {
  using nlohmann::json;
  const SvmConfig& c = model.config;
  const Standardizer& s = model.scaling;
  const json j = {
      {"format", "veriscope.svm"},
      {"version", 1},
      {"config",
       {{"c", c.c}, {"gamma", c.gamma}, {"tolerance", c.tolerance},
        {"max_passes", c.max_passes}, {"seed", c.seed}}},
      {"scaling",
       {{"input_dim", s.input_dim}, {"kept", s.kept}, {"dropped", s.dropped},
        {"mean", s.mean}, {"stddev", s.stddev}}},
      {"bias", model.bias},
      {"dual_objective", model.dual_objective},
      {"converged", model.converged},
      {"coef", model.coef},
      {"support_vectors", model.support_vectors}};
  return j.dump();
}

SvmModel LoadSvmModel(std::string_view text) {
  using nlohmann::json;
  try {
    const json j = json::parse(text);
    if (j.at("format") != "veriscope.svm" || j.at("version") != 1) {
      throw Error(ErrorCode::kFormatError, "not a version 1 SVM model");
    }
    SvmModel m;
    const json& c = j.at("config");
    m.config.c = c.at("c");
    m.config.gamma = c.at("gamma");
    m.config.tolerance = c.at("tolerance");
    m.config.max_passes = c.at("max_passes");
    m.config.seed = c.at("seed");
    const json& s = j.at("scaling");
    m.scaling.input_dim = s.at("input_dim");
    m.scaling.kept = s.at("kept").get<std::vector<std::size_t>>();
    m.scaling.dropped = s.at("dropped").get<std::vector<std::size_t>>();
    m.scaling.mean = s.at("mean").get<std::vector<double>>();
    m.scaling.stddev = s.at("stddev").get<std::vector<double>>();
    m.bias = j.at("bias");
    m.dual_objective = j.at("dual_objective");
    m.converged = j.at("converged");
    m.coef = j.at("coef").get<std::vector<double>>();
    m.support_vectors = j.at("support_vectors").get<std::vector<std::vector<double>>>();
    if (m.coef.size() != m.support_vectors.size() ||
        m.scaling.mean.size() != m.scaling.kept.size() ||
        m.scaling.stddev.size() != m.scaling.kept.size()) {
      throw Error(ErrorCode::kFormatError, "inconsistent SVM model");
    }
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormatError, std::string("SVM model: ") + e.what());
  }
}

}  // namespace veriscope
