// Copyright 2026 The wino3d Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "wino3d/lowrank.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

namespace wino3d {

namespace {

constexpr int kMaxSweeps = 80;
constexpr double kEps = std::numeric_limits<double>::epsilon();

double dot(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

// Columns of `a` are stored as rows of `w` (cols x rows) so each rotation
// touches contiguous memory. On return w = (A·V)^T and v holds V.
void hestenes(Matrix<double>& w, Matrix<double>& v) {
  const std::size_t n = w.rows();
  const std::size_t m = w.cols();
  double frob2 = 0.0;
  for (double x : w.data()) frob2 += x * x;
  const double negligible = kEps * kEps * frob2;

  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double* ap = w.row(p).data();
        double* aq = w.row(q).data();
        const double alpha = dot(ap, ap, m);
        const double beta = dot(aq, aq, m);
        const double gamma = dot(ap, aq, m);
        if (std::abs(gamma) <= kEps * std::sqrt(alpha * beta) ||
            gamma * gamma <= negligible * negligible) {
          continue;
        }
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double x = ap[i];
          const double y = aq[i];
          ap[i] = c * x - s * y;
          aq[i] = s * x + c * y;
        }
        double* vp = v.row(p).data();
        double* vq = v.row(q).data();
        for (std::size_t i = 0; i < n; ++i) {
          const double x = vp[i];
          const double y = vq[i];
          vp[i] = c * x - s * y;
          vq[i] = s * x + c * y;
        }
      }
    }
    if (!rotated) return;
  }
}

// Orthonormal vector orthogonal to the given columns of u, built from the
// first standard basis vector that survives two Gram-Schmidt passes. The
// squared residual norms sum to m - |basis|, so some e_i reaches the cutoff.
void complete_column(Matrix<double>& u, std::size_t target,
                     const std::vector<std::size_t>& basis) {
  const std::size_t m = u.rows();
  std::vector<double> x(m);
  const double cutoff =
      0.5 * std::sqrt(static_cast<double>(m - basis.size()) / static_cast<double>(m));
  for (std::size_t e = 0; e < m; ++e) {
    std::fill(x.begin(), x.end(), 0.0);
    x[e] = 1.0;
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t col : basis) {
        double proj = 0.0;
        for (std::size_t i = 0; i < m; ++i) proj += u(i, col) * x[i];
        for (std::size_t i = 0; i < m; ++i) x[i] -= proj * u(i, col);
      }
    }
    const double norm = std::sqrt(dot(x.data(), x.data(), m));
    if (norm >= cutoff) {
      for (std::size_t i = 0; i < m; ++i) u(i, target) = x[i] / norm;
      return;
    }
  }
  throw NumericError("svd: could not complete left singular basis");
}

SvdResult svd_impl(const Matrix<double>& a, bool full_right) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  if (m == 0 || n == 0) throw ShapeError("svd of an empty matrix");
  for (double x : a.data()) {
    if (!std::isfinite(x)) throw NumericError("svd: non-finite entry");
  }

  Matrix<double> w = transpose(a);
  Matrix<double> v(n, n);
  for (std::size_t i = 0; i < n; ++i) v(i, i) = 1.0;
  hestenes(w, v);

  std::vector<double> norms(n);
  for (std::size_t j = 0; j < n; ++j) {
    norms[j] = std::sqrt(dot(w.row(j).data(), w.row(j).data(), m));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return norms[x] > norms[y];
  });

  const std::size_t k = std::min(m, n);
  const std::size_t kv = full_right ? n : k;
  SvdResult res;
  res.sigma.assign(kv, 0.0);
  res.U = Matrix<double>(m, k);
  res.Vt = Matrix<double>(kv, n);

  const double sigma0 = norms[order[0]];
  const double zero_tol =
      static_cast<double>(std::max(m, n)) * kEps * sigma0;
  std::vector<std::size_t> solid;
  std::vector<std::size_t> hollow;
  for (std::size_t i = 0; i < kv; ++i) {
    const std::size_t j = order[i];
    if (i < k) res.sigma[i] = norms[j];
    // Column j of V is row j of `v`.
    const double* vj = v.row(j).data();
    double sign = 1.0;
    for (std::size_t e = 0; e < n; ++e) {
      if (std::abs(vj[e]) > 1e-12) {
        sign = vj[e] < 0.0 ? -1.0 : 1.0;
        break;
      }
    }
    for (std::size_t e = 0; e < n; ++e) res.Vt(i, e) = sign * vj[e];
    if (i >= k) continue;
    if (norms[j] > zero_tol && norms[j] > 0.0) {
      const double* wj = w.row(j).data();
      for (std::size_t r = 0; r < m; ++r) res.U(r, i) = sign * wj[r] / norms[j];
      solid.push_back(i);
    } else {
      hollow.push_back(i);
    }
  }
  for (std::size_t i : hollow) {
    complete_column(res.U, i, solid);
    solid.push_back(i);
  }
  return res;
}

}  // namespace

SvdResult svd(const Matrix<double>& a) { return svd_impl(a, false); }

SvdResult svd_full_right(const Matrix<double>& a) {
  return svd_impl(a, true);
}

template <RealScalar T>
std::pair<Matrix<T>, Matrix<T>> init_lowrank(const Matrix<T>& weight,
                                             std::size_t rank, double alpha) {
  if (rank == 0 || rank > weight.cols()) {
    throw RankError("rank " + std::to_string(rank) + " outside [1, " +
                    std::to_string(weight.cols()) + "]");
  }
  const SvdResult d = svd_full_right(weight.template cast<double>());
  const std::size_t k = d.U.cols();
  Matrix<T> row_factor(weight.rows(), rank);
  Matrix<T> col_factor(rank, weight.cols());
  for (std::size_t i = 0; i < rank; ++i) {
    if (i < k) {
      const double scale = alpha * d.sigma[i];
      for (std::size_t r = 0; r < weight.rows(); ++r) {
        row_factor(r, i) = static_cast<T>(scale * d.U(r, i));
      }
    }
    for (std::size_t c = 0; c < weight.cols(); ++c) {
      col_factor(i, c) = static_cast<T>(d.Vt(i, c));
    }
  }
  return {std::move(row_factor), std::move(col_factor)};
}

template <RealScalar T>
SpectrumReport spectrum_report(const Matrix<T>& weight) {
  const SvdResult d = svd(weight.template cast<double>());
  SpectrumReport rep;
  rep.sigma.assign(weight.cols(), 0.0);
  std::copy(d.sigma.begin(), d.sigma.end(), rep.sigma.begin());
  const double total = std::accumulate(rep.sigma.begin(), rep.sigma.end(), 0.0);
  if (!(total > 0.0)) throw DegenerateError("spectrum of an all-zero matrix");
  rep.cumulative.resize(rep.sigma.size());
  rep.individual.resize(rep.sigma.size());
  double running = 0.0;
  for (std::size_t i = 0; i < rep.sigma.size(); ++i) {
    running += rep.sigma[i];
    rep.cumulative[i] = running / total;
    rep.individual[i] = rep.sigma[i] / total;
  }
  return rep;
}

std::string spectrum_csv(
    const std::vector<std::pair<std::string, SpectrumReport>>& layers) {
  std::string out = "layer,i,sigma,individual_fraction,cumulative_fraction\n";
  char buf[160];
  for (const auto& [name, rep] : layers) {
    for (std::size_t i = 0; i < rep.sigma.size(); ++i) {
      std::snprintf(buf, sizeof buf, ",%zu,%.17g,%.17g,%.17g\n", i,
                    rep.sigma[i], rep.individual[i], rep.cumulative[i]);
      out += name;
      out += buf;
    }
  }
  return out;
}

Matrix<double> truncated_update_eval(const Matrix<double>& weight,
                                     const Matrix<double>& update,
                                     std::size_t rank) {
  if (weight.rows() != update.rows() || weight.cols() != update.cols()) {
    throw ShapeError("truncated_update_eval: shape mismatch");
  }
  if (rank > weight.cols()) {
    throw RankError("rank " + std::to_string(rank) + " exceeds " +
                    std::to_string(weight.cols()));
  }
  Matrix<double> out = weight;
  if (rank == 0) return out;
  const SvdResult d = svd(update);
  const std::size_t s = std::min(rank, d.sigma.size());
  for (std::size_t r = 0; r < out.rows(); ++r) {
    double* o = out.row(r).data();
    for (std::size_t i = 0; i < s; ++i) {
      const double coef = d.sigma[i] * d.U(r, i);
      const double* vrow = d.Vt.row(i).data();
      for (std::size_t c = 0; c < out.cols(); ++c) o[c] += coef * vrow[c];
    }
  }
  return out;
}

template std::pair<Matrix<float>, Matrix<float>> init_lowrank(
    const Matrix<float>&, std::size_t, double);
template std::pair<Matrix<double>, Matrix<double>> init_lowrank(
    const Matrix<double>&, std::size_t, double);
template SpectrumReport spectrum_report(const Matrix<float>&);
template SpectrumReport spectrum_report(const Matrix<double>&);

}  // namespace wino3d
