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

// Singular-value tools for Winograd-domain weights.

#ifndef WINO3D_LOWRANK_HPP_
#define WINO3D_LOWRANK_HPP_

#include <string>
#include <utility>
#include <vector>

#include "wino3d/tensor.hpp"

namespace wino3d {

/// Thin SVD A = U·diag(sigma)·Vt with k = min(rows, cols) components.
struct SvdResult {
  std::vector<double> sigma;  // non-increasing, length k
  Matrix<double> U;           // rows x k, orthonormal columns
  Matrix<double> Vt;          // k x cols, orthonormal rows
};

/// One-sided (Hestenes) Jacobi SVD with a fixed cyclic sweep order, so the
/// result is bit-reproducible. The first entry of each right singular vector
/// with magnitude above 1e-12 is made positive. Left vectors belonging to
/// numerically zero singular values are completed to an orthonormal set.
/// Throws NumericError on non-finite input.
SvdResult svd(const Matrix<double>& a);

/// Like svd, but Vt holds all `cols` right singular vectors (rows beyond k
/// span the null space) and sigma is zero-padded to length `cols`.
SvdResult svd_full_right(const Matrix<double>& a);

/// G_r(:, i) = alpha·sigma_i·u_i and G_c(i, :) = v_i^T for i < s, so
/// G_r·G_c = alpha·(rank-s truncation of G_W). Requires 1 <= s <= cols.
template <RealScalar T>
std::pair<Matrix<T>, Matrix<T>> init_lowrank(const Matrix<T>& weight,
                                             std::size_t rank, double alpha);

struct SpectrumReport {
  std::vector<double> sigma;       // length cols, zero-padded
  std::vector<double> cumulative;  // Σ_{j<=i} sigma_j / Σ sigma
  std::vector<double> individual;  // sigma_i / Σ sigma
};

/// Throws DegenerateError for an all-zero matrix.
template <RealScalar T>
SpectrumReport spectrum_report(const Matrix<T>& weight);

/// CSV with columns layer,i,sigma,individual_fraction,cumulative_fraction.
std::string spectrum_csv(
    const std::vector<std::pair<std::string, SpectrumReport>>& layers);

/// G_W plus the rank-s SVD truncation of dG_W; 0 <= s <= cols.
Matrix<double> truncated_update_eval(const Matrix<double>& weight,
                                     const Matrix<double>& update,
                                     std::size_t rank);

}  // namespace wino3d

#endif  // WINO3D_LOWRANK_HPP_
