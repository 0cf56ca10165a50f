#include "bresse/propagator.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "bresse/io.hpp"
#include "bresse/parallel.hpp"
#include "bresse/spectral.hpp"

namespace bresse {

std::vector<double> make_grid(const GridSpec& g) {
    if (g.n < 4 || g.n % 2 != 0) throw PreconditionError("make_grid: n must be even and >= 4");
    if (!(g.xi_min > 0) || !(g.xi_max > g.xi_min)) throw PreconditionError("make_grid: need 0 < xi_min < xi_max");
    const int half = g.n / 2;
    std::vector<double> pos;
    pos.reserve(half);
    if (g.xi_max <= 1.0) {
        for (int i = 0; i < half; ++i) pos.push_back(g.xi_min * std::pow(g.xi_max / g.xi_min, double(i) / (half - 1)));
    } else {
        const int n_geo = std::max(2, half / 2), n_lin = half - n_geo;
        for (int i = 0; i < n_geo; ++i) pos.push_back(g.xi_min * std::pow(1.0 / g.xi_min, double(i) / (n_geo - 1)));
        for (int i = 1; i <= n_lin; ++i) pos.push_back(1.0 + (g.xi_max - 1.0) * double(i) / n_lin);
    }
    std::vector<double> grid;
    grid.reserve(g.n);
    for (auto it = pos.rbegin(); it != pos.rend(); ++it) grid.push_back(-*it);
    grid.insert(grid.end(), pos.begin(), pos.end());
    return grid;
}

nlohmann::json grid_json(const GridSpec& g) {
    return {{"kind", "symmetric_geometric_linear"}, {"n", g.n}, {"xi_min", g.xi_min}, {"xi_max", g.xi_max}};
}

double hermitian_defect(const FourierState& s) {
    const std::size_t n = s.grid.size();
    double worst = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t m = n - 1 - i;
        if (s.grid[m] != -s.grid[i]) continue;
        worst = std::max(worst, (s.values[m] - s.values[i].conjugate()).cwiseAbs().maxCoeff());
    }
    return worst;
}

StatePropagator::StatePropagator(const FourierState& s0, int threads) : s0_(s0), threads_(threads) {
    s0_.params.validate();
    if (s0_.grid.size() != s0_.values.size()) throw PreconditionError("FourierState: grid/values size mismatch");
    const std::size_t n = s0_.grid.size();
    lambdas_.resize(n);
    q_.resize(n);
    weights_.resize(n);
    parallel_for(n, threads_, [&](std::size_t i) {
        const PutzerPropagator prop(build_symbol(s0_.params, s0_.grid[i]));
        lambdas_[i] = prop.lambdas();
        const Eigen::Matrix<lcplx, 6, 1> u = s0_.values[i].cast<lcplx>();
        for (int j = 0; j < 6; ++j) {
            q_[i][j] = prop.P(j) * u;
            weights_[i][j] = q_[i][j].norm();
        }
    });
}

FourierState StatePropagator::at(double t) const {
    if (!(t >= s0_.t)) throw PreconditionError("evolve: target time precedes state time");
    FourierState out = s0_;
    out.t = t;
    const double dt = t - s0_.t;
    if (dt == 0) return out;
    parallel_for(out.grid.size(), threads_, [&](std::size_t i) {
        const PutzerR r = putzer_r(lambdas_[i], dt, &weights_[i]);
        Eigen::Matrix<lcplx, 6, 1> acc = Eigen::Matrix<lcplx, 6, 1>::Zero();
        for (int j = 0; j < 6; ++j) acc += r.r[j] * q_[i][j];
        out.values[i] = acc.cast<cplx>();
    });
    return out;
}

std::vector<double> StatePropagator::abs2_at(double t) const {
    const FourierState s = at(t);
    std::vector<double> out(s.values.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = s.values[i].squaredNorm();
    return out;
}

FourierState evolve(const FourierState& s, double t_target, int threads) {
    if (!(t_target >= s.t)) throw PreconditionError("evolve: t_target must be >= state.t");
    if (t_target == s.t) return s;
    return StatePropagator(s, threads).at(t_target);
}

EnergyRecord energy_record(const FourierState& s) {
    EnergyRecord r;
    r.t = s.t;
    r.E_hat.resize(s.values.size());
    r.dissipation.resize(s.values.size());
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        r.E_hat[i] = 0.5 * s.values[i].squaredNorm();
        r.dissipation[i] = s.params.gamma1 * std::norm(s.values[i][Y]) + s.params.gamma2 * std::norm(s.values[i][ETA]);
    }
    return r;
}

EnergyAudit energy_audit(const FourierState& s, double dt, int threads) {
    if (!(dt > 0)) throw PreconditionError("energy_audit: dt must be > 0");
    const StatePropagator prop(s, threads);
    EnergyAudit a;
    a.before = energy_record(s);
    a.after = energy_record(prop.at(s.t + dt));
    const EnergyRecord mid = energy_record(prop.at(s.t + 0.5 * dt));
    for (std::size_t i = 0; i < s.grid.size(); ++i) {
        const double rate = (a.after.E_hat[i] - a.before.E_hat[i]) / dt;
        const double res = std::abs(rate + mid.dissipation[i]);
        if (res > a.max_residual) {
            a.max_residual = res;
            a.worst_xi = s.grid[i];
        }
    }
    return a;
}

double plancherel_norm(const std::vector<double>& grid, const std::vector<double>& abs2, int j, double tail_tol) {
    if (j < 0) throw PreconditionError("plancherel_norm: j must be >= 0");
    const std::size_t n = grid.size();
    if (n != abs2.size()) throw PreconditionError("plancherel_norm: size mismatch");
    if (n < 2) return 0.0;
    std::vector<double> f(n);
    double peak = 0;
    for (std::size_t i = 0; i < n; ++i) {
        f[i] = std::pow(std::abs(grid[i]), 2 * j) * abs2[i];
        peak = std::max(peak, f[i]);
    }
    if (peak == 0) return 0.0;
    if (f.front() > tail_tol * peak || f.back() > tail_tol * peak)
        throw NumericalError(fmt::format("plancherel_norm: tail mass at grid edge (left {:.3e}, right {:.3e}, peak {:.3e})",
                                         f.front(), f.back(), peak));
    double sum = 0;
    for (std::size_t i = 1; i < n; ++i) sum += 0.5 * (f[i] + f[i - 1]) * (grid[i] - grid[i - 1]);
    return sum;
}

double plancherel_norm(const FourierState& s, int j, double tail_tol) {
    std::vector<double> abs2(s.values.size());
    for (std::size_t i = 0; i < abs2.size(); ++i) abs2[i] = s.values[i].squaredNorm();
    return plancherel_norm(s.grid, abs2, j, tail_tol);
}

namespace {
const char* kNames[6] = {"v", "u", "z", "y", "phi", "eta"};
}

std::string state_csv(const FourierState& s) {
    std::string out = "xi";
    for (const char* n : kNames) out += fmt::format(",re_{0},im_{0}", n);
    out += '\n';
    for (std::size_t i = 0; i < s.grid.size(); ++i) {
        out += fmt_double(s.grid[i]);
        for (int c = 0; c < 6; ++c)
            out += "," + fmt_double(s.values[i][c].real()) + "," + fmt_double(s.values[i][c].imag());
        out += '\n';
    }
    return out;
}

FourierState parse_state_csv(const std::string& text) {
    const auto rows = parse_csv(text);
    if (rows.empty() || rows[0].size() != 13 || rows[0][0] != "xi")
        throw PreconditionError("state csv: missing or malformed header");
    FourierState s;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != 13) throw PreconditionError(fmt::format("state csv: row {} has {} fields", r, rows[r].size()));
        s.grid.push_back(std::stod(rows[r][0]));
        CVec6 v;
        for (int c = 0; c < 6; ++c) v[c] = cplx(std::stod(rows[r][1 + 2 * c]), std::stod(rows[r][2 + 2 * c]));
        s.values.push_back(v);
    }
    return s;
}

void write_state(const FourierState& s, const std::string& base) {
    nlohmann::json head{{"t", s.t}, {"params", s.params}, {"grid", s.grid_descriptor}, {"n", s.grid.size()}};
    atomic_write(base + ".csv", state_csv(s));
    atomic_write(base + ".json", head.dump(2) + "\n");
}

FourierState read_state(const std::string& base) {
    FourierState s = parse_state_csv(read_file(base + ".csv"));
    const auto head = nlohmann::json::parse(read_file(base + ".json"));
    s.t = head.at("t").get<double>();
    s.params = head.at("params").get<SystemParams>();
    s.grid_descriptor = head.at("grid");
    return s;
}

}  // namespace bresse
