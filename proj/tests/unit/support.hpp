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

#include <complex>
#include <cstdint>

#include "grassq/numerics.hpp"
#include "grassq/rng.hpp"

namespace grassq::test {

inline ComplexMatrix gaussian_matrix(Index rows, Index cols, CounterRng& rng)
{
    ComplexMatrix a(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) a(i, j) = rng.complex_gaussian();
    return a;
}

inline ComplexMatrix random_unitary(Index m, CounterRng& rng)
{
    return SubspaceBasis::orthonormalize(gaussian_matrix(m, m, rng)).matrix();
}

inline double identity_error(const ComplexMatrix& a)
{
    return (a - ComplexMatrix::Identity(a.rows(), a.cols())).cwiseAbs().maxCoeff();
}

} // namespace grassq::test
