// SPDX-License-Identifier: Apache-2.0
//
// ricmimo - multi-cell Massive MIMO uplink under spatially correlated Rician fading
// Copyright (C) 2026 The ricmimo authors
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

#ifndef RICMIMO_COMMON_HPP
#define RICMIMO_COMMON_HPP

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ricmimo {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

inline constexpr double kPi = std::numbers::pi;

// Bad argument to a library function (dimension mismatch, out-of-domain value).
class InvalidArgument : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// A configuration that can never describe a valid system (K > tau_p, non-square L, ...).
class InvalidConfiguration : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

// Raised when a quantity that is analytically guaranteed (real, positive) is not.
// Seeing one of these means there is a bug, not bad input.
class InternalError : public std::logic_error {
  public:
    using std::logic_error::logic_error;
};

inline double db_to_linear(double x_db) { return std::pow(10.0, x_db / 10.0); }

inline double dbm_to_mw(double x_dbm) { return db_to_linear(x_dbm); }

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }

// Returns Re{z} after checking |Im{z}| <= tol * scale. `scale` should be the
// magnitude the imaginary residue is judged against (usually |z| or a norm of
// the operands).
inline double checked_real(Complex z, double scale, const char* what, double tol = 1e-9) {
    const double ref = std::max(std::abs(scale), std::abs(z.real()));
    if (std::abs(z.imag()) > tol * ref && std::abs(z.imag()) > 1e-300) {
        throw InternalError(std::string(what) + ": imaginary residue " + std::to_string(z.imag()) +
                            " exceeds tolerance (real part " + std::to_string(z.real()) + ")");
    }
    return z.real();
}

// Frobenius inner product sum_ab conj(A_ab) B_ab, which equals tr(A B) when A is Hermitian.
inline Complex trace_product_hermitian(const CMatrix& hermitian_a, const CMatrix& b) {
    return hermitian_a.conjugate().cwiseProduct(b).sum();
}

// Maximum entrywise deviation from Hermitian symmetry, relative to the largest entry.
inline double hermitian_residue(const CMatrix& a) {
    if (a.size() == 0) {
        return 0.0;
    }
    // squared moduli, so no hypot per entry
    const double scale2 = a.cwiseAbs2().maxCoeff();
    if (scale2 == 0.0) {
        return 0.0;
    }
    return std::sqrt((a - a.adjoint()).cwiseAbs2().maxCoeff() / scale2);
}

}  // namespace ricmimo

#endif  // RICMIMO_COMMON_HPP
