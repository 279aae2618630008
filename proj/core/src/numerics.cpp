#include "catp/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace catp {

namespace {

void ensure_finite(const Matrix& m, const char* op) {
  if (!m.all_finite()) {
    throw std::runtime_error(std::string(op) + ": non-finite value in result");
  }
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul: inner dimensions differ (" +
                                std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()) + ")");
  }
  Matrix c(a.rows(), b.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) {
        c(i, j) += aik * b(k, j);
      }
    }
  }
  ensure_finite(c, "matmul");
  return c;
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      t(j, i) = m(i, j);
    }
  }
  return t;
}

Matrix layer_norm(const Matrix& x, std::span<const double> gamma,
                  std::span<const double> beta, double eps) {
  if (gamma.size() != x.cols() || beta.size() != x.cols()) {
    throw std::invalid_argument("layer_norm: gamma/beta length != cols");
  }
  if (!(eps > 0.0)) {
    throw std::invalid_argument("layer_norm: eps must be > 0");
  }
  Matrix out(x.rows(), x.cols());
  const double n = static_cast<double>(x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) mean += x(i, j);
    mean /= n;
    double var = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) {
      const double d = x(i, j) - mean;
      var += d * d;
    }
    var /= n;
    const double inv = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < x.cols(); ++j) {
      out(i, j) = gamma[j] * ((x(i, j) - mean) * inv) + beta[j];
    }
  }
  ensure_finite(out, "layer_norm");
  return out;
}

Matrix softmax_rows(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double rowmax = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < x.cols(); ++j) rowmax = std::max(rowmax, x(i, j));
    double sum = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) {
      const double e = std::exp(x(i, j) - rowmax);
      out(i, j) = e;
      sum += e;
    }
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) /= sum;
  }
  ensure_finite(out, "softmax_rows");
  return out;
}

double sigmoid_temp(double x, double tau) {
  if (!(tau > 0.0)) {
    throw std::invalid_argument("sigmoid_temp: tau must be > 0");
  }
  const double y = 1.0 / (1.0 + std::exp(-(x / tau)));
  // Keep the result strictly inside (0, 1); downstream weight sums divide by
  // p and 1 - p.
  constexpr double lo = std::numeric_limits<double>::min();
  constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
  return std::clamp(y, lo, hi);
}

std::vector<double> sigmoid_temp(std::span<const double> x, double tau) {
  if (!(tau > 0.0)) {
    throw std::invalid_argument("sigmoid_temp: tau must be > 0");
  }
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = sigmoid_temp(x[i], tau);
  return out;
}

double gelu(double x) {
  const double c = std::sqrt(2.0 / std::numbers::pi);
  return 0.5 * x * (1.0 + std::tanh(c * (x + 0.044715 * x * x * x)));
}

Matrix gelu(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out.data()[i] = gelu(x.data()[i]);
  ensure_finite(out, "gelu");
  return out;
}

}  // namespace catp
