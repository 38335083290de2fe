#pragma once

// Dense LU factorization with partial pivoting, shared by the nonlinear
// network solvers and the simplex basis handling. Row-major storage.

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

namespace decnet::detail {

struct Lu {
  int n = 0;
  std::vector<double> a;  // packed L\U factors
  std::vector<int> piv;
  bool ok = false;
};

inline Lu lu_factor(std::vector<double> a, int n) {
  Lu lu;
  lu.n = n;
  lu.a = std::move(a);
  lu.piv.resize(n);
  double* m = lu.a.data();
  // Singularity threshold relative to the largest entry: accepting a pivot
  // that is mere elimination residue turns later solves into overflow.
  double amax = 0.0;
  for (int i = 0; i < n * n; ++i) amax = std::max(amax, std::abs(m[i]));
  if (!(amax < std::numeric_limits<double>::infinity())) return lu;
  const double tiny = 1e-14 * amax;
  for (int k = 0; k < n; ++k) {
    int p = k;
    double best = std::abs(m[k * n + k]);
    for (int r = k + 1; r < n; ++r) {
      double v = std::abs(m[r * n + k]);
      if (v > best) {
        best = v;
        p = r;
      }
    }
    lu.piv[k] = p;
    if (best <= tiny) return lu;  // singular, ok stays false
    if (p != k)
      for (int c = 0; c < n; ++c) std::swap(m[k * n + c], m[p * n + c]);
    double d = m[k * n + k];
    for (int r = k + 1; r < n; ++r) {
      double f = m[r * n + k] / d;
      m[r * n + k] = f;
      if (f != 0.0)
        for (int c = k + 1; c < n; ++c) m[r * n + c] -= f * m[k * n + c];
    }
  }
  lu.ok = true;
  return lu;
}

// Solves A x = b in place.
inline void lu_solve(const Lu& lu, std::vector<double>& b) {
  int n = lu.n;
  const double* m = lu.a.data();
  // The stored L reflects the final row order, so the permutation must be
  // applied to b in full before any elimination step uses those entries.
  for (int k = 0; k < n; ++k)
    if (lu.piv[k] != k) std::swap(b[k], b[lu.piv[k]]);
  for (int k = 0; k < n; ++k)
    for (int r = k + 1; r < n; ++r) b[r] -= m[r * n + k] * b[k];
  for (int k = n - 1; k >= 0; --k) {
    for (int c = k + 1; c < n; ++c) b[k] -= m[k * n + c] * b[c];
    b[k] /= m[k * n + k];
  }
}

// Solves A^T x = b in place.
inline void lu_solve_transpose(const Lu& lu, std::vector<double>& b) {
  int n = lu.n;
  const double* m = lu.a.data();
  // U^T y = b (forward), then L^T x = y (backward), then un-permute.
  for (int k = 0; k < n; ++k) {
    for (int r = 0; r < k; ++r) b[k] -= m[r * n + k] * b[r];
    b[k] /= m[k * n + k];
  }
  for (int k = n - 1; k >= 0; --k)
    for (int r = k + 1; r < n; ++r) b[k] -= m[r * n + k] * b[r];
  for (int k = n - 1; k >= 0; --k)
    if (lu.piv[k] != k) std::swap(b[k], b[lu.piv[k]]);
}

}  // namespace decnet::detail
