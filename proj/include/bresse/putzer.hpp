#pragma once

#include <array>
#include <complex>
#include <string>

#include <Eigen/Dense>

#include "bresse/model.hpp"

namespace bresse {

using lcplx = std::complex<long double>;
using LMat6 = Eigen::Matrix<lcplx, 6, 6>;

enum class RMethod { closed_form, confluent, ode_chain };
const char* to_string(RMethod m);

struct PutzerR {
    std::array<lcplx, 6> r{};
    RMethod method = RMethod::closed_form;
    long double error_estimate = 0;  ///< absolute rounding estimate per unit weight
};

/// Putzer coefficients r_1..r_6 at time t for eigenvalues in the given order.
/// r_j is the divided difference of exp(z t) on the first j nodes. Nodes
/// closer than cluster_tol*(1+|lambda|) are merged (confluent formula). When
/// `weights` (norms of P_0..P_5) are supplied and the closed form's rounding
/// estimate exceeds `abs_tol`, the triangular ODE chain is integrated instead.
PutzerR putzer_r(const std::array<cplx, 6>& lambdas, double t, const std::array<long double, 6>* weights = nullptr,
                 double abs_tol = 1e-11, double cluster_tol = 1e-7);

/// r from adaptive Dormand-Prince integration of r1' = l1 r1, rj' = lj rj + r(j-1).
std::array<lcplx, 6> putzer_r_ode(const std::array<cplx, 6>& lambdas, double t, double rtol = 1e-13);

/// Eigenvalues sorted by descending real part, then ascending imaginary part.
std::array<cplx, 6> putzer_order(std::array<cplx, 6> lambdas);

/// Precomputed Putzer data for one symbol: ordered eigenvalues and
/// P_j = prod_{k<=j} (Phi - lambda_k I), j = 0..6, in extended precision.
class PutzerPropagator {
public:
    explicit PutzerPropagator(const SymbolMatrix& s);
    PutzerPropagator(const SymbolMatrix& s, const std::array<cplx, 6>& ordered_lambdas);

    CMat6 exp(double t, RMethod* used = nullptr) const;
    CVec6 apply(double t, const CVec6& u0) const;

    const std::array<cplx, 6>& lambdas() const { return lambdas_; }
    const LMat6& P(int j) const { return P_[j]; }
    /// Frobenius norm of P_6 (zero in exact arithmetic).
    double cayley_hamilton_residual() const;
    double phi_norm() const { return phi_norm_; }

private:
    void build(const SymbolMatrix& s);
    std::array<cplx, 6> lambdas_;
    std::array<LMat6, 7> P_;
    std::array<long double, 6> weights_;
    double phi_norm_ = 0;
};

struct MatrixExp {
    CMat6 E;
    std::array<cplx, 6> order;
    RMethod method = RMethod::closed_form;
};

MatrixExp matrix_exp(const SymbolMatrix& s, double t);

}  // namespace bresse
