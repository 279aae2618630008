#pragma once

#include <span>
#include <vector>

#include "catp/matrix.hpp"

namespace catp {

inline constexpr double kLayerNormEps = 1e-6;

// c[i][j] = sum_k a[i][k] * b[k][j], accumulated in 64-bit.
// Throws std::invalid_argument on a.cols != b.rows.
Matrix matmul(const Matrix& a, const Matrix& b);

Matrix transpose(const Matrix& m);

// Per-row normalization to zero mean / unit variance (biased variance),
// followed by the affine map gamma * xhat + beta.
Matrix layer_norm(const Matrix& x, std::span<const double> gamma,
                  std::span<const double> beta, double eps = kLayerNormEps);

// Row-wise softmax with per-row max subtraction. Each output row is
// nonnegative and sums to 1 within 1e-12.
Matrix softmax_rows(const Matrix& x);

// y = 1 / (1 + exp(-x / tau)), clamped so every output lies strictly inside
// (0, 1). Throws std::invalid_argument on tau <= 0.
double sigmoid_temp(double x, double tau);
std::vector<double> sigmoid_temp(std::span<const double> x, double tau);

// tanh-form gelu: 0.5 * x * (1 + tanh(sqrt(2/pi) * (x + 0.044715 * x^3)))
double gelu(double x);
Matrix gelu(const Matrix& x);

}  // namespace catp
