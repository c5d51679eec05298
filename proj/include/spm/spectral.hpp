#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spm/incidence.hpp"
#include "spm/numeric.hpp"
#include "spm/params.hpp"

namespace spm {

/// Small dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::vector<double> operator*(std::span<const double> x) const {
    std::vector<double> y(rows_, 0.0);
    for (std::size_t i = 0; i < rows_; ++i) {
      CompensatedSum s;
      for (std::size_t j = 0; j < cols_; ++j) s += (*this)(i, j) * x[j];
      y[i] = s.value();
    }
    return y;
  }

  Matrix operator*(const Matrix& other) const {
    Matrix out(rows_, other.cols_);
    for (std::size_t i = 0; i < rows_; ++i) {
      for (std::size_t j = 0; j < other.cols_; ++j) {
        CompensatedSum s;
        for (std::size_t k = 0; k < cols_; ++k) s += (*this)(i, k) * other(k, j);
        out(i, j) = s.value();
      }
    }
    return out;
  }

  Matrix operator+(const Matrix& other) const {
    Matrix out(*this);
    for (std::size_t k = 0; k < data_.size(); ++k) out.data_[k] += other.data_[k];
    return out;
  }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// B(a) = T + F(a): T holds stage transitions (diagonal 1 - g_j, subdiagonal
/// g_j), F(a) = a * (r in the first row) holds new infections.
struct StageMatrixDecomposition {
  double a = 0.0;
  std::vector<double> gamma;
  std::vector<double> r;
  Matrix T;
  Matrix F;
  Matrix B;

  std::size_t size() const { return gamma.size(); }
  /// sum_j r_j / g_j, so that the closed-form NRV is a * delta.
  double delta() const {
    CompensatedSum s;
    for (std::size_t j = 0; j < gamma.size(); ++j) s += r[j] / gamma[j];
    return s.value();
  }
  /// rho(T) = max_j (1 - g_j), T being triangular.
  double transition_radius() const {
    double m = 0.0;
    for (double g : gamma) m = std::max(m, 1.0 - g);
    return m;
  }
};

inline StageMatrixDecomposition build_B(double a, std::span<const double> gamma, std::span<const double> r) {
  const std::size_t n = gamma.size();
  if (!(a > 0.0) || !std::isfinite(a)) throw std::invalid_argument("build_B: susceptible level a must be positive");
  if (r.size() != n) throw std::invalid_argument("build_B: r and gamma lengths differ");
  if (n == 0) throw std::invalid_argument("build_B: empty stage structure");
  for (double x : r) {
    if (!(x >= 0.0)) throw std::invalid_argument("build_B: r must be nonnegative");
  }
  if (!(r[n - 1] > 0.0)) throw std::invalid_argument("build_B: r_n must be positive");
  for (double g : gamma) {
    if (!(g > 0.0 && g < 1.0)) throw std::invalid_argument("build_B: gamma_j must lie in (0,1)");
  }

  StageMatrixDecomposition d;
  d.a = a;
  d.gamma.assign(gamma.begin(), gamma.end());
  d.r.assign(r.begin(), r.end());
  d.T = Matrix(n, n);
  d.F = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    d.T(j, j) = 1.0 - gamma[j];
    if (j + 1 < n) d.T(j + 1, j) = gamma[j];
    d.F(0, j) = a * r[j];
  }
  d.B = d.T + d.F;
  return d;
}

inline StageMatrixDecomposition build_B(double a, const StageParams& params, std::span<const double> r) {
  return build_B(a, params.gamma(), r);
}

/// Solves (I - T) x = b by forward substitution. I - T is lower bidiagonal
/// with diagonal g_j and subdiagonal -g_j.
inline std::vector<double> solve_identity_minus_transitions(std::span<const double> gamma, std::span<const double> b) {
  const std::size_t n = gamma.size();
  std::vector<double> x(n);
  x[0] = b[0] / gamma[0];
  for (std::size_t j = 1; j < n; ++j) x[j] = (b[j] + gamma[j - 1] * x[j - 1]) / gamma[j];
  return x;
}

/// Power-iteration estimate of the dominant eigenvalue of a nonnegative
/// matrix whose dominant eigenvalue is the Perron root.
inline double dominant_eigenvalue(const Matrix& M, double tol = 1e-15, std::size_t max_iterations = 100000) {
  const std::size_t n = M.rows();
  std::vector<double> x(n, 1.0 / static_cast<double>(n));
  double estimate = 0.0;
  for (std::size_t k = 0; k < max_iterations; ++k) {
    std::vector<double> y = M * x;
    const double norm = l1_norm(y);
    if (norm == 0.0) return 0.0;
    for (double& v : y) v /= norm;
    const bool settled = std::abs(norm - estimate) <= tol * norm;
    estimate = norm;
    x = std::move(y);
    if (settled && k > 0) return estimate;
  }
  throw std::runtime_error("dominant_eigenvalue: power iteration did not converge");
}

/// Net reproductive value rho(F (I - T)^{-1}). (I - T)^{-1} is assembled
/// column by column with the bidiagonal solve, then the spectral radius of
/// the next-generation matrix is found numerically.
inline double nrv(const StageMatrixDecomposition& d) {
  const std::size_t n = d.size();
  if (!(d.transition_radius() < 1.0)) throw std::runtime_error("nrv: I - T is singular");
  Matrix inverse(n, n);
  std::vector<double> e(n, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    std::fill(e.begin(), e.end(), 0.0);
    e[c] = 1.0;
    const auto column = solve_identity_minus_transitions(d.gamma, e);
    for (std::size_t i = 0; i < n; ++i) inverse(i, c) = column[i];
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < n; ++c) {
      if (!std::isfinite(inverse(i, c))) throw std::runtime_error("nrv: I - T is numerically singular");
    }
  }
  return dominant_eigenvalue(d.F * inverse);
}

/// delta = sum_j r_j / g_j
inline double transmission_delta(const StageParams& params, const IncidenceModel& incidence) {
  if (incidence.dimension() != params.stages()) throw std::invalid_argument("delta: incidence dimension does not match params");
  CompensatedSum s;
  const auto r = incidence.r();
  for (std::size_t j = 0; j < params.stages(); ++j) s += r[j] / params.gamma(j);
  return s.value();
}

/// Basic reproduction number N * delta.
inline double r0(const StageParams& params, const IncidenceModel& incidence) {
  return params.population() * transmission_delta(params, incidence);
}

struct PerronData {
  double rho = 0.0;
  std::vector<double> v;  ///< positive, sums to 1
  std::size_t iterations = 0;
  double last_change = 0.0;  ///< infinity-norm change of the final iterate
};

/// Right Perron pair of B(a) by power iteration with l1 normalisation,
/// starting from the uniform vector. Stops once successive iterates differ
/// by less than `tol` in the infinity norm; the eigen-residual
/// ||B v - rho v||_inf is then bounded by rho * tol.
inline PerronData perron(const StageMatrixDecomposition& d, double tol = 1e-13, std::size_t max_iterations = 100000) {
  const std::size_t n = d.size();
  std::vector<double> v(n, 1.0 / static_cast<double>(n));
  PerronData out;
  for (std::size_t k = 1; k <= max_iterations; ++k) {
    std::vector<double> w = d.B * v;
    const double rho = l1_norm(w);
    for (double& x : w) x /= rho;
    double change = 0.0;
    for (std::size_t j = 0; j < n; ++j) change = std::max(change, std::abs(w[j] - v[j]));
    v = std::move(w);
    if (change < tol) {
      // one more product gives the eigenvalue belonging to the returned vector
      out.rho = l1_norm(d.B * v);
      out.v = std::move(v);
      out.iterations = k;
      out.last_change = change;
      return out;
    }
  }
  throw std::runtime_error("perron: power iteration exceeded " + std::to_string(max_iterations) + " iterations");
}

/// ||B v - rho v||_inf
inline double eigen_residual(const StageMatrixDecomposition& d, const PerronData& p) {
  const auto bv = d.B * p.v;
  double m = 0.0;
  for (std::size_t j = 0; j < bv.size(); ++j) m = std::max(m, std::abs(bv[j] - p.rho * p.v[j]));
  return m;
}

struct SignIdentityReport {
  int threshold_sign = 0;         ///< sign(rho - 1)
  int predicted_sign = 0;         ///< sign(a - 1/delta)
  int first_row_sign = 0;         ///< sign(a r.v - g_1 v_1)
  std::size_t pairs_checked = 0;  ///< (i, j) pairs with i < j
  std::size_t mismatches = 0;
  std::vector<std::string> details;

  bool ok() const { return mismatches == 0; }
};

/// Checks sign(rho - 1) = sign(a - 1/delta) = sign(g_i v_i - g_j v_j) for all
/// i < j = sign(a r.v - g_1 v_1). A difference is read as zero when it is below
/// zero_tol times the larger of its two terms (v can span many decades).
inline SignIdentityReport sign_identities_check(const StageMatrixDecomposition& d, const PerronData& p,
                                                double zero_tol = 1e-9) {
  SignIdentityReport rep;
  const std::size_t n = d.size();
  const double delta = d.delta();
  rep.threshold_sign = tolerant_sign(p.rho - 1.0, zero_tol);
  // a - 1/delta compared on the a*delta - 1 scale so the zero band matches rho - 1
  rep.predicted_sign = tolerant_sign(d.a * delta - 1.0, zero_tol);
  if (rep.predicted_sign != rep.threshold_sign) {
    ++rep.mismatches;
    rep.details.push_back("sign(rho-1) != sign(a-1/delta)");
  }
  const double inflow = d.a * dot(d.r, p.v);
  const double outflow = d.gamma[0] * p.v[0];
  rep.first_row_sign = tolerant_sign(inflow - outflow, zero_tol * std::max(inflow, outflow));
  if (rep.first_row_sign != rep.threshold_sign) {
    ++rep.mismatches;
    rep.details.push_back("sign(rho-1) != sign(a r.v - g1 v1)");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      ++rep.pairs_checked;
      const double gi = d.gamma[i] * p.v[i], gj = d.gamma[j] * p.v[j];
      const int s = tolerant_sign(gi - gj, zero_tol * std::max(gi, gj));
      if (s != rep.threshold_sign) {
        ++rep.mismatches;
        rep.details.push_back("sign(rho-1) != sign(g" + std::to_string(i + 1) + " v" + std::to_string(i + 1) + " - g" +
                              std::to_string(j + 1) + " v" + std::to_string(j + 1) + ")");
      }
    }
  }
  return rep;
}

/// max_j |g_{j-1} v_{j-1} - g_j v_j - (rho - 1) v_j| over j = 2..n
inline double chain_identity_residual(const StageMatrixDecomposition& d, const PerronData& p) {
  double m = 0.0;
  for (std::size_t j = 1; j < d.size(); ++j) {
    const double lhs = d.gamma[j - 1] * p.v[j - 1] - d.gamma[j] * p.v[j];
    m = std::max(m, std::abs(lhs - (p.rho - 1.0) * p.v[j]));
  }
  return m;
}

}  // namespace spm
