#include "newsrisk/linear_model.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

#include "newsrisk/errors.hpp"

namespace newsrisk {

namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

std::size_t validate_training_set(const std::vector<SparseVector>& X, const std::vector<bool>& y) {
  if (X.empty()) throw TrainingError("training set is empty");
  if (X.size() != y.size()) throw TrainingError("feature rows and labels differ in length");
  const std::size_t dim = X.front().dim;
  for (const auto& x : X) {
    if (x.dim != dim) throw DimensionError("training rows have inconsistent dimensions");
  }
  const auto positives = static_cast<std::size_t>(std::count(y.begin(), y.end(), true));
  if (positives == 0 || positives == y.size()) {
    throw TrainingError("labels contain a single class; use the constant-prediction fallback");
  }
  return dim;
}

void check_dim(std::span<const double> w, const std::vector<SparseVector>& X) {
  for (const auto& x : X) {
    if (x.dim != w.size()) throw DimensionError("row dimension does not match weight dimension");
  }
}

const char* kind_name(LinearKind k) { return k == LinearKind::Logistic ? "logistic" : "hinge"; }

// Top eigenvalue of mean x~x~^T, x~ = (x, 1), by power iteration from a
// fixed start; never above the trace bound mean(|x|^2 + 1).
double second_moment_top_eigenvalue(const std::vector<SparseVector>& X, std::size_t dim) {
  double trace = 0.0;
  for (const auto& x : X) trace += x.squared_norm() + 1.0;
  const double n = static_cast<double>(X.size());
  trace /= n;

  std::vector<double> v(dim + 1), u(dim + 1);
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> unit(0.5, 1.5);
  for (auto& e : v) e = unit(rng);
  double estimate = 0.0;
  for (int iter = 0; iter < 100; ++iter) {
    double vv = 0.0;
    for (double e : v) vv += e * e;
    const double inv = 1.0 / std::sqrt(vv);
    for (auto& e : v) e *= inv;
    std::fill(u.begin(), u.end(), 0.0);
    for (const auto& x : X) {
      const double p = x.dot(std::span<const double>(v.data(), dim)) + v[dim];
      for (std::size_t k = 0; k < x.indices.size(); ++k) u[x.indices[k]] += p * x.values[k];
      u[dim] += p;
    }
    double rayleigh = 0.0;
    for (std::size_t j = 0; j <= dim; ++j) {
      u[j] /= n;
      rayleigh += u[j] * v[j];
    }
    const bool converged = std::abs(rayleigh - estimate) <= 1e-9 * rayleigh;
    estimate = rayleigh;
    v.swap(u);
    if (converged) break;
  }
  return std::min(trace, estimate);
}

}  // namespace

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double default_threshold(LinearKind kind) { return kind == LinearKind::Logistic ? 0.5 : 0.0; }

LinearPrediction predict_linear(const LinearModel& model, const SparseVector& x) {
  return predict_linear(model, x, default_threshold(model.kind));
}

LinearPrediction predict_linear(const LinearModel& model, const SparseVector& x, double threshold) {
  if (x.dim != model.weights.size()) {
    throw DimensionError("feature dimension " + std::to_string(x.dim) + " does not match model dimension " +
                         std::to_string(model.weights.size()));
  }
  const double margin = x.dot(model.weights) + model.bias;
  LinearPrediction p;
  p.score = model.kind == LinearKind::Logistic ? sigmoid(margin) : margin;
  p.label = p.score >= threshold;
  return p;
}

double logistic_objective(std::span<const double> w, double b, const std::vector<SparseVector>& X,
                          const std::vector<bool>& y, double lambda) {
  check_dim(w, X);
  double loss = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    const double z = X[i].dot(w) + b;
    loss += y[i] ? softplus(-z) : softplus(z);
  }
  double reg = 0.0;
  for (double wi : w) reg += wi * wi;
  return loss / static_cast<double>(X.size()) + 0.5 * lambda * reg;
}

Gradient logistic_gradient(std::span<const double> w, double b, const std::vector<SparseVector>& X,
                           const std::vector<bool>& y, double lambda) {
  check_dim(w, X);
  Gradient g;
  g.weights.assign(w.size(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(X.size());
  for (std::size_t i = 0; i < X.size(); ++i) {
    const double residual = (sigmoid(X[i].dot(w) + b) - (y[i] ? 1.0 : 0.0)) * inv_n;
    const auto& x = X[i];
    for (std::size_t k = 0; k < x.indices.size(); ++k) g.weights[x.indices[k]] += residual * x.values[k];
    g.bias += residual;
  }
  for (std::size_t j = 0; j < w.size(); ++j) g.weights[j] += lambda * w[j];
  return g;
}

double hinge_objective(std::span<const double> w, double b, const std::vector<SparseVector>& X,
                       const std::vector<bool>& y, double lambda) {
  check_dim(w, X);
  double loss = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    const double sign = y[i] ? 1.0 : -1.0;
    loss += std::max(0.0, 1.0 - sign * (X[i].dot(w) + b));
  }
  double reg = 0.0;
  for (double wi : w) reg += wi * wi;
  return loss / static_cast<double>(X.size()) + 0.5 * lambda * reg;
}

LinearModel train_logistic(const std::vector<SparseVector>& X, const std::vector<bool>& y,
                           const LinearHyper& hyper, std::vector<double>* loss_trace) {
  const std::size_t dim = validate_training_set(X, y);
  if (!(hyper.l2_lambda > 0.0)) throw TrainingError("l2_lambda must be positive");
  if (!(hyper.learning_rate > 0.0)) throw TrainingError("learning_rate must be positive");

  // Smoothness of the objective in (w, b) is lambda + top_eigenvalue(mean x~x~^T) / 4
  // with x~ = (x, 1). Descent is monotone for any step below 2 / smoothness.
  const double smoothness = hyper.l2_lambda + 0.25 * second_moment_top_eigenvalue(X, dim);
  const double step = std::min(hyper.learning_rate, 1.0 / smoothness);

  LinearModel m;
  m.kind = LinearKind::Logistic;
  m.hyper = hyper;
  m.weights.assign(dim, 0.0);
  if (loss_trace) {
    loss_trace->clear();
    loss_trace->push_back(logistic_objective(m.weights, m.bias, X, y, hyper.l2_lambda));
  }
  for (std::size_t epoch = 0; epoch < hyper.epochs; ++epoch) {
    const Gradient g = logistic_gradient(m.weights, m.bias, X, y, hyper.l2_lambda);
    for (std::size_t j = 0; j < dim; ++j) m.weights[j] -= step * g.weights[j];
    m.bias -= step * g.bias;
    if (loss_trace) loss_trace->push_back(logistic_objective(m.weights, m.bias, X, y, hyper.l2_lambda));
  }
  return m;
}

LinearModel train_svm(const std::vector<SparseVector>& X, const std::vector<bool>& y,
                      const LinearHyper& hyper) {
  const std::size_t dim = validate_training_set(X, y);
  const double lambda = hyper.l2_lambda;
  if (!(lambda > 0.0)) throw TrainingError("l2_lambda must be positive");

  // w = scale * (v, vb); the bias is the weight of a constant 1 feature.
  std::vector<double> v(dim, 0.0);
  double vb = 0.0;
  double scale = 1.0;
  double sq_norm_v = 0.0;  // |v|^2 + vb^2
  const double radius = 1.0 / std::sqrt(lambda);

  std::mt19937_64 rng(hyper.seed);
  const std::size_t n = X.size();
  const std::size_t steps = hyper.epochs * n;
  for (std::size_t t = 1; t <= steps; ++t) {
    const std::size_t i = static_cast<std::size_t>(rng() % n);
    const auto& x = X[i];
    const double sign = y[i] ? 1.0 : -1.0;
    const double eta = 1.0 / (lambda * static_cast<double>(t));
    const double vx = x.dot(v) + vb;
    const double margin = sign * scale * vx;

    const double shrink = 1.0 - eta * lambda;
    if (shrink <= 0.0) {
      std::fill(v.begin(), v.end(), 0.0);
      vb = 0.0;
      sq_norm_v = 0.0;
      scale = 1.0;
    } else {
      scale *= shrink;
    }

    if (margin < 1.0) {
      // v += a * (x, 1) with a chosen so that w gains eta * sign * (x, 1).
      const double a = eta * sign / scale;
      const double vx_now = (shrink <= 0.0) ? 0.0 : vx;
      sq_norm_v += 2.0 * a * vx_now + a * a * (x.squared_norm() + 1.0);
      for (std::size_t k = 0; k < x.indices.size(); ++k) v[x.indices[k]] += a * x.values[k];
      vb += a;
    }

    const double w_norm = scale * std::sqrt(std::max(sq_norm_v, 0.0));
    if (w_norm > radius) scale *= radius / w_norm;

    if (scale < 1e-100 || scale > 1e100) {
      for (double& vi : v) vi *= scale;
      vb *= scale;
      sq_norm_v *= scale * scale;
      scale = 1.0;
    }
  }

  LinearModel m;
  m.kind = LinearKind::Hinge;
  m.hyper = hyper;
  m.weights.resize(dim);
  for (std::size_t j = 0; j < dim; ++j) m.weights[j] = scale * v[j];
  m.bias = scale * vb;
  return m;
}

void LinearModel::save(std::ostream& out) const {
  std::ostringstream s;
  s.precision(17);
  s << "linear 1 " << kind_name(kind) << ' ' << weights.size() << ' ' << bias << ' ' << hyper.l2_lambda
    << ' ' << hyper.epochs << ' ' << hyper.learning_rate << ' ' << hyper.seed << '\n';
  for (double w : weights) s << w << '\n';
  out << s.str();
}

LinearModel LinearModel::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("missing linear model header");
  std::istringstream header(line);
  std::string magic, kind;
  int version = 0;
  std::size_t dim = 0;
  LinearModel m;
  header >> magic >> version >> kind >> dim >> m.bias >> m.hyper.l2_lambda >> m.hyper.epochs >>
      m.hyper.learning_rate >> m.hyper.seed;
  if (!header || magic != "linear" || version != 1) throw ParseError("bad linear model header '" + line + "'");
  if (kind == "logistic") {
    m.kind = LinearKind::Logistic;
  } else if (kind == "hinge") {
    m.kind = LinearKind::Hinge;
  } else {
    throw ParseError("unknown linear model kind '" + kind + "'");
  }
  m.weights.resize(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    if (!std::getline(in, line)) throw ParseError("linear model truncated at weight " + std::to_string(j));
    char* end = nullptr;
    m.weights[j] = std::strtod(line.c_str(), &end);
    if (end == line.c_str() || !std::isfinite(m.weights[j])) throw ParseError("bad weight line '" + line + "'");
  }
  return m;
}

}  // namespace newsrisk
