// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>

#include "grassq/rng.hpp"

namespace grassq {

using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using Index = Eigen::Index;

/// Tolerance for structural identities (orthonormality, annihilation).
inline constexpr double kStructuralTol = 1e-10;
/// Tolerance for reconstruction identities (SVD, inverse square root).
inline constexpr double kReconstructionTol = 1e-9;

/// Orthonormal basis of an m-dimensional subspace of C^n, i.e. a point on
/// the Grassmann manifold G(n, m) together with a particular basis.
///
/// The only way to obtain one is through a constructor that either checks
/// B^H B = I_m (from_orthonormal) or produces an orthonormal result by
/// construction (orthonormalize and the library operations).
class SubspaceBasis {
  public:
    SubspaceBasis() = default;

    /// Checks B^H B = I_m to `tol`; throws std::invalid_argument otherwise.
    static SubspaceBasis from_orthonormal(ComplexMatrix basis, double tol = kStructuralTol);

    /// Orthonormal basis of span(A) by two-pass modified Gram-Schmidt, with the column phase
    /// convention applied. A must be tall with full column rank.
    static SubspaceBasis orthonormalize(const ComplexMatrix& a);

    /// Normalized copy of a nonzero vector (the m = 1 fast path).
    static SubspaceBasis from_vector(const ComplexVector& v);

    /// For results that are orthonormal by construction; checked in debug builds.
    static SubspaceBasis assume_orthonormal(ComplexMatrix basis);

    const ComplexMatrix& matrix() const noexcept { return basis_; }
    Index ambient_dim() const noexcept { return basis_.rows(); }
    Index subspace_dim() const noexcept { return basis_.cols(); }
    bool empty() const noexcept { return basis_.size() == 0; }

    /// max |(B^H B - I)_{ij}|
    double orthonormality_error() const;

  private:
    explicit SubspaceBasis(ComplexMatrix basis) : basis_(std::move(basis)) {}
    ComplexMatrix basis_;
};

struct CompactSvd {
    SubspaceBasis u;
    Eigen::VectorXd singular_values;
    SubspaceBasis v;
};

/// Thin SVD of an n x m matrix with n >= m. Singular values descend and the
/// first non-negligible entry of every column of U is real and nonnegative
/// (V receives the matching phases, so H = U diag(s) V^H still holds).
CompactSvd compact_svd(const ComplexMatrix& h);

/// Normalized chordal distance 1 - (1/m) tr(Q^H U U^H Q) in [0, 1].
///
/// U is n x m; Q is n x p with p >= m. With p == m this is the symmetric
/// subspace distance; with p > m it measures how far span(U) is from being
/// contained in span(Q), which is the per-stage error of the recursive
/// quantizer.
double chordal_distance(const SubspaceBasis& u, const SubspaceBasis& q);

/// Isotropically distributed m-dimensional subspace of C^n: orthonormalized
/// n x m matrix of iid CN(0, 1) entries, drawn column by column.
SubspaceBasis random_semiunitary(Index n, Index m, CounterRng& rng);

/// Hermitian S with S A S = I for Hermitian positive definite A.
ComplexMatrix inv_sqrt_hermitian(const ComplexMatrix& a);

/// d x (d-1) orthonormal basis of the orthogonal complement of span(q).
///
/// Uses the Householder reflector P = I - 2 v v^H / (v^H v), v = q + phase(q_0) e_0,
/// whose first column spans q; the remaining columns are returned. The
/// result depends only on q (and is unchanged by q -> e^{j theta} q).
SubspaceBasis complement_completion(const SubspaceBasis& q);
SubspaceBasis complement_completion(const ComplexVector& q);

/// Multiplies every column by a unit phase so that its first entry with
/// magnitude above `threshold` becomes real and nonnegative.
void apply_column_phase_convention(ComplexMatrix& a, double threshold = 1e-12);

} // namespace grassq
