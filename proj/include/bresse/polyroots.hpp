#pragma once

#include <array>
#include <complex>

#include "bresse/params.hpp"

namespace bresse {

using cplx = std::complex<double>;

/// Roots of a monic sextic (ascending coefficients) from the companion matrix.
std::array<cplx, 6> companion_roots(const std::array<cplx, 7>& coeffs);

struct PolishResult {
    std::array<cplx, 6> roots;
    int sweeps = 0;
    bool converged = false;
};

/// Roots of det(lambda I - Phi(i xi)). Starting values come from the
/// companion matrix in double precision; they are then refined by
/// Aberth-Ehrlich sweeps on quad-precision coefficients, which keeps real
/// parts of order 1e-14 meaningful next to |lambda| ~ 1e3.
PolishResult symbol_roots(const SystemParams& p, double xi);

}  // namespace bresse
