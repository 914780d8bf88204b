// SPDX-License-Identifier: Apache-2.0
/**
 * @file   numerics.hpp
 * @brief  Small dense matrix, gate nonlinearities and the seeded random
 *         source shared by the rest of the library.
 *
 * The random source is SplitMix64 (Steele, Lea, Flood 2014) with its
 * published increment 0x9e3779b97f4a7c15 and finalizer constants. It is
 * the only generator used in this repository; every seeded result depends
 * on it.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qoe {

using Vector = std::vector<double>;

class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
      throw std::invalid_argument("Matrix: data length " +
                                  std::to_string(data_.size()) + " != " +
                                  std::to_string(rows_) + "x" +
                                  std::to_string(cols_));
    for (double v : data_)
      if (!std::isfinite(v))
        throw std::invalid_argument("Matrix: non-finite entry");
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  double operator()(std::size_t r, std::size_t c) const noexcept {
    return data_[r * cols_ + c];
  }
  double &operator()(std::size_t r, std::size_t c) noexcept {
    return data_[r * cols_ + c];
  }

  std::span<const double> row(std::size_t r) const noexcept {
    return {data_.data() + r * cols_, cols_};
  }
  std::span<const double> values() const noexcept { return data_; }
  std::span<double> values() noexcept { return data_; }

  std::string shape() const {
    return std::to_string(rows_) + "x" + std::to_string(cols_);
  }

  friend bool operator==(const Matrix &, const Matrix &) = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// out += m * v, no shape checks. Used on hot paths after validation.
inline void matvec_add(const Matrix &m, const double *v, double *out) noexcept {
  const std::size_t cols = m.cols();
  const double *p = m.values().data();
  for (std::size_t r = 0; r < m.rows(); ++r, p += cols) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += p[c] * v[c];
    out[r] += acc;
  }
}

/// out += m^T * v, no shape checks.
inline void matvec_transpose_add(const Matrix &m, const double *v,
                                 double *out) noexcept {
  const std::size_t cols = m.cols();
  const double *p = m.values().data();
  for (std::size_t r = 0; r < m.rows(); ++r, p += cols) {
    const double s = v[r];
    for (std::size_t c = 0; c < cols; ++c) out[c] += p[c] * s;
  }
}

/// m += a * b^T
inline void outer_add(Matrix &m, const double *a, const double *b) noexcept {
  const std::size_t cols = m.cols();
  double *p = m.values().data();
  for (std::size_t r = 0; r < m.rows(); ++r, p += cols) {
    const double s = a[r];
    if (s == 0.0) continue;
    for (std::size_t c = 0; c < cols; ++c) p[c] += s * b[c];
  }
}

inline Vector matvec(const Matrix &m, std::span<const double> v) {
  if (v.size() != m.cols()) {
    std::ostringstream os;
    os << "matvec: matrix " << m.shape() << " cannot multiply vector of length "
       << v.size();
    throw std::invalid_argument(os.str());
  }
  Vector out(m.rows(), 0.0);
  matvec_add(m, v.data(), out.data());
  return out;
}

inline double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double tanh(double x) noexcept { return std::tanh(x); }

/// SplitMix64. Copyable; copies continue the same stream.
class Rng {
public:
  explicit Rng(std::uint64_t seed = 0) noexcept : seed_(seed), state_(seed) {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() noexcept {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    return mix(z);
  }

  /// Uniform on [0, 1) with 53 bits of resolution.
  double uniform() noexcept {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) noexcept {
    return lo + (hi - lo) * uniform();
  }

  /// Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Rng::below: n must be > 0");
    const std::uint64_t limit =
        std::numeric_limits<std::uint64_t>::max() -
        std::numeric_limits<std::uint64_t>::max() % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  /// Standard normal via Box-Muller; the spare draw is cached.
  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  /// Child generator for an independent stream; does not advance *this.
  Rng derive(std::uint64_t stream) const noexcept {
    return Rng(mix(seed_ ^ mix(stream + 0x632be59bd9b4e019ULL)));
  }

  /// Child generator; advances *this by one draw.
  Rng split() noexcept { return Rng(next_u64()); }

  static std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

private:
  std::uint64_t seed_;
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

template <class T>
void shuffle(std::vector<T> &items, Rng &rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(items[i - 1], items[j]);
  }
}

inline bool all_finite(std::span<const double> v) noexcept {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

} // namespace qoe
