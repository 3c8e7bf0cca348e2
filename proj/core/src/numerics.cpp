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

#include "grassq/numerics.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>
#include <string>

#include "grassq/errors.hpp"

namespace grassq {

namespace {

std::string shape(const ComplexMatrix& a)
{
    return std::to_string(a.rows()) + "x" + std::to_string(a.cols());
}

// Rotates column j so that its first entry above `threshold` becomes real and
// nonnegative (set exactly, not left with rounding residue). Returns the phase.
std::complex<double> rotate_column_phase(ComplexMatrix& a, Index j, double threshold)
{
    for (Index i = 0; i < a.rows(); ++i) {
        const double mag = std::abs(a(i, j));
        if (mag > threshold) {
            const std::complex<double> phase = std::conj(a(i, j)) / mag;
            a.col(j) *= phase;
            a(i, j) = mag;
            return phase;
        }
    }
    return {1.0, 0.0};
}

// Modified Gram-Schmidt with one reorthogonalization pass, written as plain
// scalar loops so the result does not depend on the SIMD width of the build
// (codebooks must be bit-identical wherever they are regenerated).
bool orthonormalize_columns(ComplexMatrix& q)
{
    const Index n = q.rows();
    for (Index j = 0; j < q.cols(); ++j) {
        double original = 0.0;
        for (Index i = 0; i < n; ++i) original += std::norm(q(i, j));
        for (int pass = 0; pass < 2; ++pass) {
            for (Index k = 0; k < j; ++k) {
                std::complex<double> dot{0.0, 0.0};
                for (Index i = 0; i < n; ++i) dot += std::conj(q(i, k)) * q(i, j);
                for (Index i = 0; i < n; ++i) q(i, j) -= dot * q(i, k);
            }
        }
        double norm2 = 0.0;
        for (Index i = 0; i < n; ++i) norm2 += std::norm(q(i, j));
        if (!(norm2 > 1e-26 * original) || !(norm2 > 0.0)) return false;
        const double inv = 1.0 / std::sqrt(norm2);
        for (Index i = 0; i < n; ++i) q(i, j) *= inv;
    }
    return true;
}

} // namespace

SubspaceBasis SubspaceBasis::from_orthonormal(ComplexMatrix basis, double tol)
{
    if (basis.cols() == 0 || basis.rows() < basis.cols())
        throw std::invalid_argument("subspace basis must be n x m with n >= m >= 1, got " + shape(basis));
    SubspaceBasis b(std::move(basis));
    const double err = b.orthonormality_error();
    if (!(err <= tol))
        throw std::invalid_argument("basis is not semi-unitary (max |B^H B - I| = " + std::to_string(err) + ")");
    return b;
}

SubspaceBasis SubspaceBasis::orthonormalize(const ComplexMatrix& a)
{
    if (a.cols() == 0 || a.rows() < a.cols())
        throw std::invalid_argument("orthonormalize expects a tall matrix, got " + shape(a));
    ComplexMatrix q = a;
    if (!orthonormalize_columns(q)) throw NumericalFailure("orthonormalize: input is rank deficient");
    apply_column_phase_convention(q);
    return SubspaceBasis(std::move(q));
}

SubspaceBasis SubspaceBasis::from_vector(const ComplexVector& v)
{
    const double norm = v.norm();
    if (!(norm > 0.0) || !std::isfinite(norm))
        throw std::invalid_argument("from_vector: vector must be finite and nonzero");
    return SubspaceBasis(v / norm);
}

SubspaceBasis SubspaceBasis::assume_orthonormal(ComplexMatrix basis)
{
    SubspaceBasis b(std::move(basis));
    assert(b.orthonormality_error() <= 1e-8);
    return b;
}

double SubspaceBasis::orthonormality_error() const
{
    const Index m = basis_.cols();
    return (basis_.adjoint() * basis_ - ComplexMatrix::Identity(m, m)).cwiseAbs().maxCoeff();
}

void apply_column_phase_convention(ComplexMatrix& a, double threshold)
{
    for (Index j = 0; j < a.cols(); ++j) rotate_column_phase(a, j, threshold);
}

CompactSvd compact_svd(const ComplexMatrix& h)
{
    if (h.cols() == 0 || h.rows() < h.cols())
        throw std::invalid_argument("compact_svd expects n x m with n >= m >= 1, got " + shape(h));
    if (!h.allFinite()) throw NumericalFailure("compact_svd: input contains non-finite entries");

    Eigen::JacobiSVD<ComplexMatrix> svd(h, Eigen::ComputeThinU | Eigen::ComputeThinV);
    ComplexMatrix u = svd.matrixU();
    ComplexMatrix v = svd.matrixV();
    Eigen::VectorXd s = svd.singularValues();
    if (!u.allFinite() || !v.allFinite() || !s.allFinite())
        throw NumericalFailure("compact_svd: decomposition did not converge (non-finite factors for " + shape(h) +
                               " input)");

    for (Index j = 0; j < u.cols(); ++j) v.col(j) *= rotate_column_phase(u, j, 1e-12);

    const double residual = (h - u * s.asDiagonal() * v.adjoint()).norm();
    const double ref = std::max(h.norm(), 1e-300);
    if (!(residual <= 1e-8 * ref))
        throw NumericalFailure("compact_svd: reconstruction residual " + std::to_string(residual / ref) +
                               " exceeds tolerance");
    return {SubspaceBasis::assume_orthonormal(std::move(u)), std::move(s),
            SubspaceBasis::assume_orthonormal(std::move(v))};
}

double chordal_distance(const SubspaceBasis& u, const SubspaceBasis& q)
{
    if (u.ambient_dim() != q.ambient_dim() || q.subspace_dim() < u.subspace_dim())
        throw std::invalid_argument("chordal_distance: incompatible shapes " + shape(u.matrix()) + " and " +
                                    shape(q.matrix()));
    const double m = static_cast<double>(u.subspace_dim());
    const double overlap = (q.matrix().adjoint() * u.matrix()).squaredNorm() / m;
    return std::clamp(1.0 - overlap, 0.0, 1.0);
}

SubspaceBasis random_semiunitary(Index n, Index m, CounterRng& rng)
{
    if (m < 1 || n < m)
        throw std::invalid_argument("random_semiunitary requires 1 <= m <= n, got n=" + std::to_string(n) +
                                    " m=" + std::to_string(m));
    ComplexMatrix g(n, m);
    for (Index j = 0; j < m; ++j)
        for (Index i = 0; i < n; ++i) g(i, j) = rng.complex_gaussian();
    return SubspaceBasis::orthonormalize(g);
}

ComplexMatrix inv_sqrt_hermitian(const ComplexMatrix& a)
{
    if (a.rows() != a.cols() || a.rows() == 0)
        throw std::invalid_argument("inv_sqrt_hermitian expects a square matrix, got " + shape(a));
    const double asym = (a - a.adjoint()).cwiseAbs().maxCoeff();
    if (!(asym <= kStructuralTol * std::max(1.0, a.cwiseAbs().maxCoeff())))
        throw std::invalid_argument("inv_sqrt_hermitian: input is not Hermitian");

    if (a.rows() == 1) {
        const double x = a(0, 0).real();
        if (!(x > 1e-12)) throw NumericalFailure("inv_sqrt_hermitian: matrix is (near) singular");
        return ComplexMatrix::Constant(1, 1, 1.0 / std::sqrt(x));
    }
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(a);
    if (eig.info() != Eigen::Success) throw NumericalFailure("inv_sqrt_hermitian: eigensolver failed");
    const Eigen::VectorXd& lambda = eig.eigenvalues();
    if (!(lambda.minCoeff() > 1e-12))
        throw NumericalFailure("inv_sqrt_hermitian: smallest eigenvalue " + std::to_string(lambda.minCoeff()) +
                               " is not positive");
    const ComplexMatrix& vecs = eig.eigenvectors();
    return vecs * lambda.cwiseSqrt().cwiseInverse().asDiagonal() * vecs.adjoint();
}

SubspaceBasis complement_completion(const ComplexVector& q)
{
    const Index d = q.size();
    if (d < 2) throw std::invalid_argument("complement_completion requires d >= 2");
    const double norm = q.norm();
    if (std::abs(norm - 1.0) > kStructuralTol)
        throw std::invalid_argument("complement_completion requires a unit-norm vector");

    const double mag0 = std::abs(q(0));
    const std::complex<double> phase = mag0 > 0.0 ? q(0) / mag0 : std::complex<double>(1.0, 0.0);
    ComplexVector v = q;
    v(0) += phase;
    const double vnorm2 = v.squaredNorm(); // >= 2 since |v_0| = |q_0| + 1
    ComplexMatrix w(d, d - 1);
    for (Index j = 1; j < d; ++j) {
        const std::complex<double> coeff = 2.0 * std::conj(v(j)) / vnorm2;
        w.col(j - 1) = -coeff * v;
        w(j, j - 1) += 1.0;
    }
    return SubspaceBasis::assume_orthonormal(std::move(w));
}

SubspaceBasis complement_completion(const SubspaceBasis& q)
{
    if (q.subspace_dim() != 1) throw std::invalid_argument("complement_completion expects a d x 1 basis");
    return complement_completion(ComplexVector(q.matrix().col(0)));
}

} // namespace grassq
