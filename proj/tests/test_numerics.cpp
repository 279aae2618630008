#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <numbers>

#include "catp/matrix.hpp"
#include "catp/numerics.hpp"
#include "catp/rng.hpp"

using namespace catp;

TEST_CASE("matrix construction and access") {
  Matrix m(2, 3, 1.5);
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 3);
  CHECK(m(1, 2) == 1.5);

  const Matrix fixed = Matrix::from_rows({{1.0, 2.0}, {3.0, 4.0}});
  CHECK(fixed(0, 1) == 2.0);
  CHECK(fixed(1, 0) == 3.0);
  CHECK_THROWS_AS(Matrix::from_rows({{1.0}, {2.0, 3.0}}), std::invalid_argument);

  const Matrix eye = Matrix::identity(3);
  CHECK(eye(0, 0) == 1.0);
  CHECK(eye(0, 1) == 0.0);

  Matrix bad(1, 1);
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(bad.all_finite());
  CHECK(eye.all_finite());
}

TEST_CASE("matmul matches hand-computed products") {
  const Matrix a = Matrix::from_rows({{1.0, 2.0}, {3.0, 4.0}});
  const Matrix b = Matrix::from_rows({{5.0, 6.0}, {7.0, 8.0}});
  const Matrix c = matmul(a, b);
  CHECK(c(0, 0) == 19.0);
  CHECK(c(0, 1) == 22.0);
  CHECK(c(1, 0) == 43.0);
  CHECK(c(1, 1) == 50.0);

  CHECK(matmul(a, Matrix::identity(2)) == a);
  CHECK_THROWS_AS(matmul(a, Matrix(3, 2)), std::invalid_argument);
}

TEST_CASE("transpose flips indices") {
  const Matrix a = Matrix::from_rows({{1.0, 2.0, 3.0}, {4.0, 5.0, 6.0}});
  const Matrix t = transpose(a);
  CHECK(t.rows() == 3);
  CHECK(t.cols() == 2);
  CHECK(t(2, 0) == 3.0);
  CHECK(t(0, 1) == 4.0);
}

TEST_CASE("layer_norm normalizes per row") {
  const Matrix x = Matrix::from_rows({{1.0, 3.0}});
  const std::vector<double> gamma{1.0, 1.0};
  const std::vector<double> beta{0.0, 0.0};
  const Matrix out = layer_norm(x, gamma, beta);
  // mean 2, biased variance 1: normalized values are +/- 1/sqrt(1 + eps).
  CHECK(out(0, 0) == doctest::Approx(-0.999999500000375).epsilon(1e-12));
  CHECK(out(0, 1) == doctest::Approx(0.999999500000375).epsilon(1e-12));

  const Matrix constant = Matrix::from_rows({{4.0, 4.0, 4.0}});
  const std::vector<double> g3{2.0, 2.0, 2.0};
  const std::vector<double> b3{0.5, 0.5, 0.5};
  const Matrix flat = layer_norm(constant, g3, b3);
  for (std::size_t j = 0; j < 3; ++j) CHECK(flat(0, j) == 0.5);

  CHECK_THROWS_AS(layer_norm(x, g3, b3), std::invalid_argument);
}

TEST_CASE("layer_norm affine map applies after normalization") {
  const Matrix x = Matrix::from_rows({{1.0, 3.0}});
  const std::vector<double> gamma{2.0, 3.0};
  const std::vector<double> beta{10.0, 20.0};
  const Matrix out = layer_norm(x, gamma, beta);
  CHECK(out(0, 0) == doctest::Approx(10.0 - 2.0 * 0.999999500000375).epsilon(1e-12));
  CHECK(out(0, 1) == doctest::Approx(20.0 + 3.0 * 0.999999500000375).epsilon(1e-12));
}

TEST_CASE("softmax_rows produces stochastic rows") {
  const Matrix x = Matrix::from_rows({{0.0, 0.0, 0.0}, {1000.0, 1000.0, 999.0}});
  const Matrix out = softmax_rows(x);
  for (std::size_t i = 0; i < 2; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(out(i, j) >= 0.0);
      sum += out(i, j);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(out(0, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

  const Matrix single = softmax_rows(Matrix(1, 1, 123.0));
  CHECK(single(0, 0) == 1.0);
}

TEST_CASE("sigmoid_temp value, identity, and bounds") {
  CHECK(sigmoid_temp(0.0, 10.0) == 0.5);
  CHECK(sigmoid_temp(10.0, 10.0) == doctest::Approx(0.7310585786300049).epsilon(1e-15));

  for (const double x : {-3.7, 0.01, 42.0}) {
    CHECK(sigmoid_temp(x, 10.0) == sigmoid_temp(x / 10.0, 1.0));
  }

  CHECK(sigmoid_temp(1e9, 1.0) < 1.0);
  CHECK(sigmoid_temp(-1e9, 1.0) > 0.0);
  CHECK_THROWS_AS(sigmoid_temp(0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(sigmoid_temp(0.0, -1.0), std::invalid_argument);

  const std::vector<double> xs{-1.0, 0.0, 1.0};
  const std::vector<double> ys = sigmoid_temp(xs, 1.0);
  CHECK(ys[1] == 0.5);
  CHECK(ys[0] == doctest::Approx(1.0 - ys[2]).epsilon(1e-15));
}

TEST_CASE("gelu matches the tanh form") {
  CHECK(gelu(0.0) == 0.0);
  CHECK(gelu(0.5) == doctest::Approx(0.34571400982514394).epsilon(1e-14));
  CHECK(gelu(1.0) == doctest::Approx(0.8411919906082768).epsilon(1e-14));
  CHECK(gelu(-2.0) == doctest::Approx(-0.04540230591222494).epsilon(1e-12));
  CHECK(gelu(3.0) == doctest::Approx(2.996362607918227).epsilon(1e-14));

  const Matrix m = gelu(Matrix::from_rows({{0.0, 1.0}}));
  CHECK(m(0, 0) == 0.0);
  CHECK(m(0, 1) == doctest::Approx(0.8411919906082768).epsilon(1e-14));
}

TEST_CASE("rng produces the reference integer stream") {
  Rng rng(0);
  CHECK(rng.next_u64() == 0xe220a8397b1dcdafULL);
  CHECK(rng.next_u64() == 0x6e789e6aa1b965f4ULL);
  CHECK(rng.next_u64() == 0x06c45d188009454fULL);

  Rng again(0);
  CHECK(again.next_u64() == 0xe220a8397b1dcdafULL);
}

TEST_CASE("next_unit_open maps the stream into (0, 1]") {
  Rng rng(0);
  CHECK(rng.next_unit_open() ==
        static_cast<double>((0xe220a8397b1dcdafULL >> 11) + 1) * 0x1.0p-53);

  Rng sweep(99);
  for (int i = 0; i < 10000; ++i) {
    const double u = sweep.next_unit_open();
    CHECK(u > 0.0);
    CHECK(u <= 1.0);
  }
}

TEST_CASE("gaussian_vector follows the documented pairwise recipe") {
  Rng rng(42);
  const std::vector<double> samples = gaussian_vector(rng, 4, 1.0);

  Rng oracle(42);
  for (std::size_t i = 0; i < 4; i += 2) {
    const double u1 = oracle.next_unit_open();
    const double u2 = oracle.next_unit_open();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    CHECK(samples[i] == radius * std::cos(angle));
    CHECK(samples[i + 1] == radius * std::sin(angle));
  }
}

TEST_CASE("gaussian_vector consumes pairs even for odd lengths and zero scale") {
  Rng a(7);
  (void)gaussian_vector(a, 1, 1.0);
  Rng b(7);
  (void)b.next_u64();
  (void)b.next_u64();
  CHECK(a.state() == b.state());

  Rng c(7);
  const std::vector<double> zeros = gaussian_vector(c, 3, 0.0);
  for (const double z : zeros) CHECK(z == 0.0);
  CHECK(c.state() != Rng(7).state());

  Rng d(7);
  CHECK_THROWS_AS(gaussian_vector(d, 2, -0.5), std::invalid_argument);
}

TEST_CASE("gaussian_init is deterministic and roughly scaled") {
  Rng a(5);
  Rng b(5);
  const Matrix m1 = gaussian_init(a, 50, 40, 0.02);
  const Matrix m2 = gaussian_init(b, 50, 40, 0.02);
  CHECK(m1 == m2);

  double sum = 0.0;
  double sq = 0.0;
  for (const double v : m1.data()) {
    sum += v;
    sq += v * v;
  }
  const double n = static_cast<double>(m1.size());
  const double mean = sum / n;
  const double stddev = std::sqrt(sq / n - mean * mean);
  CHECK(std::abs(mean) < 0.005);
  CHECK(stddev == doctest::Approx(0.02).epsilon(0.1));
}
