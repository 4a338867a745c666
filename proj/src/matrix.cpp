/*
 * Copyright 2026 The rnncap Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "rnncap/matrix.hpp"

#include <cmath>
#include <cstdio>

#include "rnncap/rng.hpp"

namespace rnncap {

Matrix::Matrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw std::invalid_argument("matrix data size does not match shape");
  }
  check_finite("matrix construction");
}

void Matrix::check_finite(const std::string& context) const {
  for (double v : data_) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("non-finite entry in " + context);
    }
  }
}

namespace {

void require(bool cond, const char* what) {
  if (!cond) throw std::invalid_argument(what);
}

}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions differ");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) {
        out(i, j) += aik * b(k, j);
      }
    }
  }
  out.check_finite("matmul result");
  return out;
}

Vector matvec(const Matrix& a, const Vector& x) {
  require(a.cols() == x.size(), "matvec: dimension mismatch");
  Vector out(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * x[j];
    out[i] = acc;
  }
  return out;
}

Vector matvec_transposed(const Matrix& a, const Vector& x) {
  require(a.rows() == x.size(), "matvec_transposed: dimension mismatch");
  Vector out(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    for (std::size_t j = 0; j < a.cols(); ++j) out[j] += a(i, j) * xi;
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  }
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          "add: shape mismatch");
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
  out.check_finite("add result");
  return out;
}

Matrix sub(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          "sub: shape mismatch");
  Matrix out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= b.data()[i];
  out.check_finite("sub result");
  return out;
}

Matrix scale(const Matrix& a, double s) {
  Matrix out = a;
  for (double& v : out.data()) v *= s;
  out.check_finite("scale result");
  return out;
}

void axpy(Matrix& a, double s, const Matrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols(),
          "axpy: shape mismatch");
  for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] += s * b.data()[i];
  a.check_finite("axpy result");
}

double dot(const Vector& a, const Vector& b) {
  require(a.size() == b.size(), "dot: dimension mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm2(const Vector& v) { return std::sqrt(dot(v, v)); }

double norm1(const Vector& v) {
  double acc = 0.0;
  for (double x : v) acc += std::fabs(x);
  return acc;
}

double frobenius_norm(const Matrix& m) {
  double acc = 0.0;
  for (double v : m.data()) acc += v * v;
  return std::sqrt(acc);
}

double one_norm(const Matrix& m) {
  double best = 0.0;
  for (std::size_t j = 0; j < m.cols(); ++j) {
    double col = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) col += std::fabs(m(i, j));
    if (col > best) best = col;
  }
  return best;
}

PowerIterationError::PowerIterationError(double last_estimate, double gap)
    : std::runtime_error([&] {
        char buf[160];
        std::snprintf(buf, sizeof(buf),
                      "power iteration did not converge: last estimate %.17g, "
                      "gap %.17g",
                      last_estimate, gap);
        return std::string(buf);
      }()),
      last_estimate_(last_estimate),
      gap_(gap) {}

namespace {

// One power-iteration run on A^T A from a seeded unit start vector.
// Returns true on convergence; sigma and gap carry the final state.
bool power_iteration_run(const Matrix& m, Rng rng, double tol,
                         std::size_t max_iter, double* sigma, double* gap) {
  Vector v(m.cols());
  double vn = 0.0;
  do {
    for (double& x : v) x = rng.next_normal();
    vn = norm2(v);
  } while (vn == 0.0);
  for (double& x : v) x /= vn;

  double prev = -1.0;
  *gap = 0.0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    Vector u = matvec(m, v);           // u = A v
    const double sig = norm2(u);       // ||A v||, Rayleigh estimate for unit v
    if (sig == 0.0) {
      // v landed in the null space; the estimate is exact for this vector
      // but says nothing about the top singular value. Treat as stagnation
      // so the caller restarts from a fresh vector.
      *sigma = 0.0;
      *gap = prev < 0.0 ? 0.0 : std::fabs(prev);
      return false;
    }
    *gap = std::fabs(sig - prev);
    *sigma = sig;
    if (prev >= 0.0 && *gap < tol) return true;
    prev = sig;
    Vector w = matvec_transposed(m, u);  // w = A^T A v
    const double wn = norm2(w);
    if (wn == 0.0) {
      *sigma = sig;
      return false;
    }
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = w[j] / wn;
  }
  return false;
}

}  // namespace

double spectral_norm(const Matrix& m, std::uint64_t seed, double tol,
                     std::size_t max_iter) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  if (frobenius_norm(m) == 0.0) return 0.0;

  Rng rng(seed);
  double sigma = 0.0;
  double gap = 0.0;
  if (power_iteration_run(m, rng.split(0), tol, max_iter, &sigma, &gap)) {
    return sigma;
  }
  // Restart once with a fresh seeded vector before giving up.
  double sigma2 = 0.0;
  double gap2 = 0.0;
  if (power_iteration_run(m, rng.split(1), tol, max_iter, &sigma2, &gap2)) {
    return sigma2;
  }
  const bool second_better = sigma2 > sigma;
  throw PowerIterationError(second_better ? sigma2 : sigma,
                            second_better ? gap2 : gap);
}

}  // namespace rnncap
