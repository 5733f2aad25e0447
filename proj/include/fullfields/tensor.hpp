#pragma once

#include <Eigen/Core>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "fullfields/common.hpp"

namespace ff {

using MatrixRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<MatrixRM>;
using ConstMatMap = Eigen::Map<const MatrixRM>;
using VecMap = Eigen::Map<Eigen::VectorXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;

// Named parameter tensor with its gradient buffer. Training is double
// precision end to end so finite-difference checks are not fighting rounding.
struct Tensor {
  std::string name;
  std::vector<size_t> shape;
  std::vector<double> v;
  std::vector<double> g;

  Tensor() = default;
  Tensor(std::string n, std::vector<size_t> s) : name(std::move(n)), shape(std::move(s)) {
    size_t total = 1;
    for (size_t d : shape) total *= d;
    v.assign(total, 0.0);
    g.assign(total, 0.0);
  }

  size_t size() const { return v.size(); }
  size_t rows() const { return shape.at(0); }
  size_t cols() const { return shape.at(1); }

  MatMap mat() { return MatMap(v.data(), long(rows()), long(cols())); }
  ConstMatMap mat() const { return ConstMatMap(v.data(), long(rows()), long(cols())); }
  MatMap grad_mat() { return MatMap(g.data(), long(rows()), long(cols())); }

  void zero_grad() { std::fill(g.begin(), g.end(), 0.0); }

  void fill_normal(Rng& rng, double std_dev) {
    for (double& x : v) x = std_dev * rng.normal();
  }
  void fill_uniform(Rng& rng, double lo, double hi) {
    for (double& x : v) x = rng.uniform(lo, hi);
  }
};

inline void zero_grads(const std::vector<Tensor*>& params) {
  for (Tensor* t : params) t->zero_grad();
}

inline size_t param_count(const std::vector<Tensor*>& params) {
  size_t n = 0;
  for (const Tensor* t : params) n += t->size();
  return n;
}

class Adam {
 public:
  explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void step(const std::vector<Tensor*>& params) {
    if (m_.empty()) {
      for (const Tensor* t : params) {
        m_.emplace_back(t->size(), 0.0);
        v_.emplace_back(t->size(), 0.0);
      }
    }
    if (m_.size() != params.size()) throw std::logic_error("Adam: parameter set changed");
    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, double(t_));
    double bc2 = 1.0 - std::pow(beta2_, double(t_));
    for (size_t p = 0; p < params.size(); ++p) {
      Tensor& t = *params[p];
      auto& m = m_[p];
      auto& v = v_[p];
      for (size_t i = 0; i < t.size(); ++i) {
        double g = t.g[i];
        m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
        v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
        t.v[i] -= lr_ * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps_);
      }
    }
  }

  double learning_rate() const { return lr_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  size_t t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

inline bool all_finite(const std::vector<double>& xs) {
  for (double x : xs)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace ff
