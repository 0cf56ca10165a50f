#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bresse/propagator.hpp"

namespace bresse {

struct LyapunovConstants {
    double d0 = 0, d1 = 0, d2 = 0;
    double eps1 = 0, eps1p = 0, eps2 = 0, eps2p = 0, eps3 = 0, eps4 = 0;
    double eps_v = 0;  ///< absorbs gamma1 xi^2 Re(v conj y) in the F identity
    // Derived by the bookkeeping in search_constants.
    double c0 = 0;  ///< d/dt L + c0 xi^2 E <= 0
    double c1 = 0, c2 = 0;  ///< c1 w(xi) E <= L <= c2 w(xi) E
    double c3 = 0;  ///< L1 decay rate factor c0/c2
    double c4 = 0;  ///< d/dt L2 + c4 xi^2/(1+xi^2+xi^4) E <= 0
    double B = 0;   ///< |d1 F + d2 K + P| <= B (1+xi^2) |U|^2
    double d0_required = 0;  ///< smallest d0 accepted by the dissipation bookkeeping
    bool use_L2 = false;     ///< a != 1
    std::map<std::string, double> ledger;  ///< named Young constants
};

nlohmann::json to_json(const LyapunovConstants& c);

struct FunctionalValues {
    double F = 0, K = 0, P = 0, L1 = 0, L2 = 0, E_hat = 0;
};

FunctionalValues eval_functionals(const CVec6& U, const SystemParams& p, const LyapunovConstants& c, double xi);
/// xi must be a grid point of the state.
FunctionalValues eval_functionals(const FourierState& s, const SystemParams& p, const LyapunovConstants& c, double xi);

enum class Functional { F, K, P, E, L1, L2 };

/// Hermitian M with value(U) = U^* M U, recovered by polarization of eval_functionals.
CMat6 functional_matrix(const SystemParams& p, const LyapunovConstants& c, double xi, Functional which);

/// Exact time derivative along U' = Phi U: U^*(M Phi + Phi^* M) U.
double functional_rate(const SystemParams& p, const LyapunovConstants& c, double xi, Functional which, const CVec6& U);

/// Residuals of the derivative identities for F, K, P, E at one state: each
/// entry is |exact rate - identity right-hand side|. "F_printed" omits the
/// gamma1 xi^2 Re(v conj y) term; "F" includes it.
std::map<std::string, double> identity_residuals(const SystemParams& p, double xi, const CVec6& U);

/// Ordering constraints that fail (empty if consistent). d0 shortfall is
/// reported separately by audit_inequality.
std::vector<std::string> ordering_violations(const SystemParams& p, const LyapunovConstants& c);

/// Constants following the selection order eps -> d2 -> d1 -> eps1' (eps2') -> d0.
/// Throws NumericalError naming the binding constraint when infeasible.
LyapunovConstants search_constants(const SystemParams& p);

struct AuditReport {
    double xi = 0;
    std::string functional;  ///< "L1" or "L2"
    double c_claimed = 0;    ///< c0 (L1) or c4 (L2)
    double c_exact = 0;      ///< largest constant allowed by the Hermitian rate form
    double c_trajectory = 0; ///< smallest ratio observed along trajectories
    double max_violation = 0;
    int violations = 0;
    int states = 0;
    long samples = 0;
    int witness_state = -1;
    double witness_t = 0;
    bool d0_sufficient = true;
};

nlohmann::json to_json(const AuditReport& r);

/// Trajectory audit of d/dt L + c0 xi^2 E <= 0 (a = 1, L1) or
/// d/dt L2 + c4 xi^2/(1+xi^2+xi^4) E <= 0 (a != 1) on 6 basis vectors plus
/// `random_states` seeded random unit vectors. Derivatives come from
/// 4th-order central differences along exactly propagated trajectories.
AuditReport audit_inequality(const SystemParams& p, const LyapunovConstants& c, double xi, double horizon,
                             int random_states = 100, std::uint64_t seed = 1, double slack = 1e-10);

struct EquivalenceFit {
    double xi = 0;
    double sampled_min = 0, sampled_max = 0;  ///< of L / (w(xi) E) over random states
    double exact_min = 0, exact_max = 0;      ///< generalized eigenvalue bounds
};

EquivalenceFit fit_equivalence(const SystemParams& p, const LyapunovConstants& c, double xi, int samples,
                               std::uint64_t seed);

/// max over t of ||e^{Phi t}||_2^2 / ((c2/c1) exp(-c3 rho1(xi) t)); <= 1 means the bound holds.
double gronwall_ratio(const SystemParams& p, const LyapunovConstants& c, double xi, const std::vector<double>& times);

}  // namespace bresse
