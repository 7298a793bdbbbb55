#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "newsrisk/sparse.hpp"

namespace newsrisk {

enum class LinearKind { Logistic, Hinge };

struct LinearHyper {
  double l2_lambda = 1e-3;
  std::size_t epochs = 200;
  /// Upper bound on the gradient-descent step. The logistic trainer never
  /// steps further than the inverse of its smoothness bound.
  double learning_rate = 100.0;
  std::uint64_t seed = 42;

  friend bool operator==(const LinearHyper&, const LinearHyper&) = default;
};

struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
  LinearKind kind = LinearKind::Logistic;
  LinearHyper hyper;

  std::size_t dimension() const { return weights.size(); }

  void save(std::ostream& out) const;
  static LinearModel load(std::istream& in);

  friend bool operator==(const LinearModel&, const LinearModel&) = default;
};

/// 0.5 on probability for logistic models, 0 on margin for hinge models.
double default_threshold(LinearKind kind);

struct LinearPrediction {
  /// sigmoid(w.x + b) for logistic models, the raw margin for hinge models.
  double score = 0.0;
  bool label = false;
};

/// label = score >= threshold. Throws DimensionError when x.dim differs from
/// the weight dimension.
LinearPrediction predict_linear(const LinearModel& model, const SparseVector& x);
LinearPrediction predict_linear(const LinearModel& model, const SparseVector& x, double threshold);

double sigmoid(double z);

/// Mean log-loss plus (lambda/2)|w|^2. The bias is not regularized.
double logistic_objective(std::span<const double> w, double b, const std::vector<SparseVector>& X,
                          const std::vector<bool>& y, double lambda);

struct Gradient {
  std::vector<double> weights;
  double bias = 0.0;
};

/// Analytic gradient of logistic_objective.
Gradient logistic_gradient(std::span<const double> w, double b, const std::vector<SparseVector>& X,
                           const std::vector<bool>& y, double lambda);

/// Mean hinge loss plus (lambda/2)|w|^2 with labels mapped to -1/+1.
double hinge_objective(std::span<const double> w, double b, const std::vector<SparseVector>& X,
                       const std::vector<bool>& y, double lambda);

/// Full-batch gradient descent on logistic_objective for `hyper.epochs`
/// iterations. When `loss_trace` is given it receives the objective before
/// the first step and after every epoch.
///
/// Throws TrainingError for empty input, mismatched sizes or single-class
/// labels (callers should fall back to a constant predictor).
LinearModel train_logistic(const std::vector<SparseVector>& X, const std::vector<bool>& y,
                           const LinearHyper& hyper = {}, std::vector<double>* loss_trace = nullptr);

/// Stochastic subgradient descent on the hinge objective with step 1/(lambda t),
/// epochs * n seeded sample draws and projection onto the 1/sqrt(lambda) ball.
/// The bias is trained as the weight of a constant feature.
LinearModel train_svm(const std::vector<SparseVector>& X, const std::vector<bool>& y,
                      const LinearHyper& hyper = {});

}  // namespace newsrisk
