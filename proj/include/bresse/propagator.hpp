#pragma once

#include <string>
#include <vector>

#include "bresse/putzer.hpp"

namespace bresse {

struct GridSpec {
    int n = 4096;          ///< total number of frequencies (even; symmetric about 0)
    double xi_min = 1e-4;  ///< smallest |xi|
    double xi_max = 10.0;  ///< largest |xi|
};

/// Symmetric grid: geometric spacing on [xi_min, 1], linear on [1, xi_max],
/// mirrored to negative frequencies. Half the points go to each side; on the
/// positive side the split between geometric and linear parts is even.
std::vector<double> make_grid(const GridSpec& g);

nlohmann::json grid_json(const GridSpec& g);

struct FourierState {
    SystemParams params;
    std::vector<double> grid;
    std::vector<CVec6> values;
    double t = 0.0;
    nlohmann::json grid_descriptor = nlohmann::json::object();
};

/// max |U(-xi) - conj U(xi)| over mirrored grid pairs (0 for symmetric data).
double hermitian_defect(const FourierState& s);

/// One-shot evolution by Delta t = t_target - s.t (exact in time).
FourierState evolve(const FourierState& s, double t_target, int threads = 1);

/// Per-frequency Putzer propagators bound to a fixed initial state; evaluating
/// at many times reuses P_j U0.
class StatePropagator {
public:
    StatePropagator(const FourierState& s0, int threads = 1);
    FourierState at(double t) const;
    /// |U(xi_i, t)|² for every grid point.
    std::vector<double> abs2_at(double t) const;
    const FourierState& initial() const { return s0_; }

private:
    FourierState s0_;
    std::vector<std::array<cplx, 6>> lambdas_;
    std::vector<std::array<Eigen::Matrix<lcplx, 6, 1>, 6>> q_;  // P_j U0
    std::vector<std::array<long double, 6>> weights_;
    int threads_;
};

struct EnergyRecord {
    double t = 0.0;
    std::vector<double> E_hat;        ///< 0.5 |U|^2 per frequency
    std::vector<double> dissipation;  ///< gamma1 |y|^2 + gamma2 |eta|^2 per frequency
};

EnergyRecord energy_record(const FourierState& s);

struct EnergyAudit {
    EnergyRecord before, after;
    double max_residual = 0.0;
    double worst_xi = 0.0;
};

/// Central-difference audit of dE/dt = -(gamma1|y|^2 + gamma2|eta|^2) over [t, t+dt].
EnergyAudit energy_audit(const FourierState& s, double dt, int threads = 1);

/// Trapezoidal integral of |xi|^(2j) |U|^2 over the grid, i.e. the squared
/// L2 norm of the j-th derivative (no 1/2pi factor). Throws NumericalError
/// when the integrand at either grid edge exceeds tail_tol times its peak.
double plancherel_norm(const FourierState& s, int j, double tail_tol = 1e-12);
double plancherel_norm(const std::vector<double>& grid, const std::vector<double>& abs2, int j,
                       double tail_tol = 1e-12);

/// Snapshot I/O: <base>.csv (xi, re/im of the six components) and <base>.json (t, params, grid).
void write_state(const FourierState& s, const std::string& base);
FourierState read_state(const std::string& base);
std::string state_csv(const FourierState& s);
FourierState parse_state_csv(const std::string& text);

}  // namespace bresse
