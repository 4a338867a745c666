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

#ifndef RNNCAP_MATRIX_HPP
#define RNNCAP_MATRIX_HPP

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace rnncap {

using Vector = std::vector<double>;

/// Dense row-major matrix. Every public operation leaves only finite entries
/// behind; constructors and mutators validate.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  /// Throws std::invalid_argument if any entry is NaN or infinite.
  void check_finite(const std::string& context) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix matmul(const Matrix& a, const Matrix& b);
Vector matvec(const Matrix& a, const Vector& x);
/// y = A^T x without forming the transpose.
Vector matvec_transposed(const Matrix& a, const Vector& x);
Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix sub(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
/// a += s * b, in place.
void axpy(Matrix& a, double s, const Matrix& b);

double dot(const Vector& a, const Vector& b);
double norm2(const Vector& v);
double norm1(const Vector& v);

double frobenius_norm(const Matrix& m);
/// Induced 1-norm: maximum absolute column sum.
double one_norm(const Matrix& m);

/// Raised when power iteration fails to meet the tolerance within the
/// iteration budget even after a restart. Carries the last estimate and the
/// final gap between successive estimates so callers can report them.
class PowerIterationError : public std::runtime_error {
 public:
  PowerIterationError(double last_estimate, double gap);
  double last_estimate() const { return last_estimate_; }
  double gap() const { return gap_; }

 private:
  double last_estimate_;
  double gap_;
};

/// Largest singular value via power iteration on A^T A. The start vector is
/// drawn from the given seed; convergence is |sigma_k - sigma_{k-1}| < tol on
/// the Rayleigh-quotient estimate. On stagnation the iteration restarts once
/// with a fresh seeded vector, then throws PowerIterationError.
double spectral_norm(const Matrix& m, std::uint64_t seed = 0x5eedULL,
                     double tol = 1e-10, std::size_t max_iter = 1000);

}  // namespace rnncap

#endif  // RNNCAP_MATRIX_HPP
