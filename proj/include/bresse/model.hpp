#pragma once

#include <array>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bresse/params.hpp"

namespace bresse {

using cplx = std::complex<double>;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using CMat6 = Eigen::Matrix<cplx, 6, 6>;
using CVec6 = Eigen::Matrix<cplx, 6, 1>;

/// Component order of the first-order unknown U.
enum Component : int { V = 0, U_ = 1, Z = 2, Y = 3, PHI = 4, ETA = 5 };

struct SystemMatrices {
    Mat6 A;  ///< symmetric flux matrix
    Mat6 L;  ///< zero-order coupling and damping
};

struct SymbolMatrix {
    double xi = 0.0;
    Mat6 A;
    Mat6 L;
    CMat6 Phi;  ///< -(L + i xi A)
};

SystemMatrices build_matrices(const SystemParams& p);
SymbolMatrix build_symbol(const SystemParams& p, double xi);

/// Coefficients of det(lambda I - Phi(zeta)), ascending degree.
struct CharPoly {
    std::array<cplx, 7> coeffs{};
    Damping regime = Damping::general;

    cplx operator()(cplx lambda) const;
};

/// Closed-form coefficients as polynomials in w = zeta². The full formula is
/// valid in every regime; T may be real or complex.
template <class T>
std::array<T, 7> char_poly_coeffs(const SystemParams& p, const T& w) {
    const T a2 = T(p.a * p.a), k2 = T(p.k * p.k), l2 = T(p.l * p.l);
    const T g1 = T(p.gamma1), g2 = T(p.gamma2);
    const T one = T(1);
    const T m = l2 - w;
    std::array<T, 7> c;
    c[6] = one;
    c[5] = g1 + g2;
    c[4] = (k2 + one) * m + g1 * g2 + one - a2 * w;
    c[3] = g1 * (k2 + one) * m + g2 * ((k2 * l2 + one) - (one + a2) * w);
    c[2] = g1 * g2 * (k2 * l2 - w) + m * (k2 * m + (k2 - a2 * (k2 + one) * w));
    c[1] = g1 * k2 * m * m + k2 * l2 * g2 - a2 * k2 * l2 * g2 * w + a2 * g2 * w * w;
    c[0] = -a2 * k2 * w * m * m;
    return c;
}

/// Coefficients from the regime-specific closed form selected by p.damping().
CharPoly char_poly(const SystemParams& p, cplx zeta);

/// Numerical det(lambda I - Phi) via partial-pivot LU.
cplx det_lu(const CMat6& Phi, cplx lambda);

/// Checks the gamma2 = 0 factorization (quadratic times quartic) against
/// char_poly at 12 pseudo-random lambda. Throws PreconditionError if gamma2 != 0.
bool factor_check_gamma2_zero(const SystemParams& p, cplx zeta);

enum class DerivativeMethod { finite_difference4, spectral };

struct InitialData {
    std::array<std::vector<double>, 6> U;  ///< (v0,u0,z0,y0,phi0,eta0) samples
    double dx = 0.0;
    std::string derivative_method;
};

/// Physical data (phi, phi_t, psi, psi_t, w, w_t) on a uniform periodic grid
/// to first-order unknowns.
InitialData transform_initial_data(const SystemParams& p, double dx, const std::vector<double>& phi0,
                                   const std::vector<double>& phi1, const std::vector<double>& psi0,
                                   const std::vector<double>& psi1, const std::vector<double>& w0,
                                   const std::vector<double>& w1,
                                   DerivativeMethod method = DerivativeMethod::finite_difference4);

/// Periodic derivative of uniform samples.
std::vector<double> periodic_derivative(const std::vector<double>& f, double dx, DerivativeMethod method);

}  // namespace bresse
