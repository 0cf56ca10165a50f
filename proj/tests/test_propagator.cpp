#include <cmath>
#include <filesystem>
#include <random>

#include <unsupported/Eigen/MatrixFunctions>

#include "bresse/decay_lab.hpp"
#include "bresse/io.hpp"
#include "bresse/propagator.hpp"
#include "doctest.h"

using namespace bresse;

namespace {

/// Classical RK4 on r1' = l1 r1, rj' = lj rj + r(j-1) with a fixed small step.
std::array<cplx, 6> rk4_chain(const std::array<cplx, 6>& lam, double t, int steps) {
    using V = std::array<cplx, 6>;
    auto f = [&](const V& r) {
        V d;
        d[0] = lam[0] * r[0];
        for (int j = 1; j < 6; ++j) d[j] = lam[j] * r[j] + r[j - 1];
        return d;
    };
    V r{1, 0, 0, 0, 0, 0};
    const double h = t / steps;
    for (int s = 0; s < steps; ++s) {
        V k1 = f(r), tmp;
        for (int j = 0; j < 6; ++j) tmp[j] = r[j] + 0.5 * h * k1[j];
        V k2 = f(tmp);
        for (int j = 0; j < 6; ++j) tmp[j] = r[j] + 0.5 * h * k2[j];
        V k3 = f(tmp);
        for (int j = 0; j < 6; ++j) tmp[j] = r[j] + h * k3[j];
        V k4 = f(tmp);
        for (int j = 0; j < 6; ++j) r[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    }
    return r;
}

CMat6 pade_exp(const SymbolMatrix& s, double t) { return (s.Phi * t).exp(); }

double max_abs(const CMat6& m) { return m.cwiseAbs().maxCoeff(); }

FourierState gaussian_state(const SystemParams& p, int n = 512, double xi_max = 10.0) {
    GridSpec g;
    g.n = n;
    g.xi_max = xi_max;
    Profile prof;
    FourierState s = initial_state(p, prof, make_grid(g));
    s.grid_descriptor = grid_json(g);
    return s;
}

}  // namespace

TEST_CASE("putzer_r basics") {
    const std::array<cplx, 6> lam{cplx(-0.3, 1), cplx(-0.3, -1), cplx(-1, 0), cplx(-2, 0.5), cplx(-2, -0.5), cplx(-4, 0)};
    const PutzerR r0 = putzer_r(lam, 0.0);
    CHECK(r0.r[0] == lcplx(1));
    for (int j = 1; j < 6; ++j) CHECK(r0.r[j] == lcplx(0));

    const std::array<cplx, 6> dbl{cplx(-0.7, 0.2), cplx(-0.7, 0.2), cplx(-1, 0), cplx(-2, 0), cplx(-3, 0), cplx(-4, 0)};
    for (double t : {0.5, 2.0, 7.0}) {
        const PutzerR r = putzer_r(dbl, t);
        const cplx expect = t * std::exp(dbl[0] * t);
        CHECK(std::abs(cplx(r.r[1]) - expect) < 1e-14);
    }
}

TEST_CASE("putzer_r against an RK4 oracle") {
    const std::array<cplx, 6> lam{-1, -2, -3, -4, -5, -6};
    const PutzerR r = putzer_r(lam, 1.0);
    const auto o = rk4_chain(lam, 1.0, 20000);
    for (int j = 0; j < 6; ++j) CHECK(std::abs(cplx(r.r[j]) - o[j]) <= 1e-9);

    // Near-confluent nodes.
    const std::array<cplx, 6> near{cplx(-0.5, 1), cplx(-0.5 + 3e-9, 1), cplx(-0.5, 1 + 2e-9), cplx(-1, 0), cplx(-1.0 + 1e-8, 0),
                                   cplx(-2, 0)};
    for (double t : {0.3, 3.0}) {
        const PutzerR a = putzer_r(near, t);
        const auto b = rk4_chain(near, t, 40000);
        for (int j = 0; j < 6; ++j) CHECK(std::abs(cplx(a.r[j]) - b[j]) <= 1e-9);
        const auto c = putzer_r_ode(near, t);
        for (int j = 0; j < 6; ++j) CHECK(std::abs(cplx(c[j]) - b[j]) <= 1e-9);
    }
}

TEST_CASE("putzer_r overflow policy") {
    std::array<cplx, 6> lam{cplx(1, 0), -1, -2, -3, -4, -5};
    CHECK_THROWS_AS(putzer_r(lam, 800.0), NumericalError);
    lam = {cplx(-1, 0), -2, -3, -4, -5, -6};
    const PutzerR r = putzer_r(lam, 1000.0);
    for (int j = 0; j < 6; ++j) CHECK(std::abs(r.r[j]) == 0.0L);
}

TEST_CASE("matrix_exp identities and the Pade oracle") {
    const SymbolMatrix s = build_symbol({1, 1, 0.5, 1, 1}, 1.0);
    const MatrixExp e0 = matrix_exp(s, 0.0);
    CHECK(e0.E == CMat6::Identity());
    CHECK(max_abs(matrix_exp(s, 1.0).E - pade_exp(s, 1.0)) <= 1e-8);
    const auto order = putzer_order(e0.order);
    CHECK(order == e0.order);
    for (int j = 1; j < 6; ++j)
        CHECK((order[j - 1].real() > order[j].real() ||
               (order[j - 1].real() == order[j].real() && order[j - 1].imag() <= order[j].imag())));

    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.2, 2.5), x(-20, 20), t(0, 5);
    for (int trial = 0; trial < 40; ++trial) {
        const SystemParams p{u(rng), u(rng), u(rng), trial % 3 == 1 ? 0.0 : u(rng), trial % 3 == 2 ? 0.0 : u(rng)};
        const SymbolMatrix q = build_symbol(p, x(rng));
        const double t1 = t(rng), t2 = t(rng);
        const CMat6 lhs = matrix_exp(q, t1 + t2).E, rhs = matrix_exp(q, t1).E * matrix_exp(q, t2).E;
        CHECK(max_abs(lhs - rhs) <= 1e-8);
        CHECK(max_abs(lhs - pade_exp(q, t1 + t2)) <= 1e-8);

        // Assembled exponential does not depend on the eigenvalue order.
        const PutzerPropagator a(q);
        auto rev = a.lambdas();
        std::reverse(rev.begin(), rev.end());
        const PutzerPropagator b(q, rev);
        CHECK(max_abs(a.exp(t1) - b.exp(t1)) <= 1e-8);

        const double bound = 1e-6 * std::pow(1.0 + a.phi_norm(), 6);
        CHECK(a.cayley_hamilton_residual() <= bound);
    }
}

TEST_CASE("grid construction") {
    GridSpec g;
    g.n = 64;
    const auto grid = make_grid(g);
    CHECK(grid.size() == 64);
    CHECK(std::is_sorted(grid.begin(), grid.end()));
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(grid[i] == -grid[grid.size() - 1 - i]);
    CHECK(grid[32] == doctest::Approx(1e-4));
    CHECK(grid.back() == doctest::Approx(10.0));
    g.n = 63;
    CHECK_THROWS_AS(make_grid(g), PreconditionError);
}

TEST_CASE("evolve") {
    SUBCASE("zero step leaves the state unchanged") {
        const FourierState s = gaussian_state({1, 1, 0.5, 1, 1});
        const FourierState e = evolve(s, s.t);
        CHECK(e.values == s.values);
        CHECK_THROWS_AS(evolve(s, -1.0), PreconditionError);
    }
    SUBCASE("undamped evolution preserves |U| per frequency") {
        const FourierState s = gaussian_state({1.4, 0.8, 0.6, 0, 0}, 128);
        const FourierState e = evolve(s, 25.0);
        for (std::size_t i = 0; i < s.grid.size(); ++i)
            CHECK(std::abs(e.values[i].norm() - s.values[i].norm()) <= 1e-9 * (1 + s.values[i].norm()));
    }
    SUBCASE("conservative eigenvector keeps its modulus") {
        const SystemParams p{1, 1.5, 0.7, 1, 0};
        const Spectrum sp = eigenvalues(p, 1.0);
        int best = 0;
        for (int j = 0; j < 6; ++j)
            if (sp.eigenvalues[j].imag() > 0 && std::abs(sp.eigenvalues[j].real()) < std::abs(sp.eigenvalues[best].real()))
                best = j;
        const CVec6 v = inverse_iteration(p, 1.0, sp.eigenvalues[best]);
        const PutzerPropagator prop(build_symbol(p, 1.0));
        for (double t = 0; t <= 100; t += 5) CHECK(std::abs(prop.apply(t, v).norm() - 1.0) <= 1e-8);
    }
    SUBCASE("Hermitian symmetry and thread determinism") {
        const FourierState s = gaussian_state({2, 1.5, 0.5, 1, 1});
        CHECK(hermitian_defect(s) == 0.0);
        const FourierState a = evolve(s, 3.0, 1), b = evolve(s, 3.0, 2);
        CHECK(a.values == b.values);
        CHECK(hermitian_defect(a) <= 1e-14);
    }
}

TEST_CASE("energy identity") {
    SUBCASE("undamped") {
        const FourierState s = gaussian_state({1, 1, 0.5, 0, 0}, 128);
        const EnergyAudit a = energy_audit(s, 1e-3);
        CHECK(a.max_residual <= 1e-10);
    }
    SUBCASE("instantaneous dissipation") {
        FourierState s;
        s.params = {1, 1, 1, 1, 0.5};
        s.grid = {-1.0, 1.0};
        CVec6 y = CVec6::Zero();
        y[Y] = 1.0;
        s.values = {y, y};
        const EnergyRecord r = energy_record(s);
        CHECK(r.dissipation[0] == 1.0);
        CHECK(r.E_hat[0] == 0.5);
    }
    SUBCASE("gaussian data") {
        const FourierState s = gaussian_state({1, 1, 0.5, 1, 1});
        const double r1 = energy_audit(s, 1e-3).max_residual, r2 = energy_audit(s, 1e-4).max_residual;
        CHECK(r2 <= 1e-6);
        CHECK(std::log10(r1 / r2) >= 1.9);
    }
}

TEST_CASE("Plancherel quadrature") {
    std::vector<double> grid;
    for (int i = -200; i <= 200; ++i) grid.push_back(0.01 * i);
    std::vector<double> zero(grid.size(), 0.0), box(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double a = std::abs(grid[i]);
        box[i] = a < 1 - 1e-12 ? 1.0 : (a < 1 + 1e-12 ? 0.5 : 0.0);
    }
    CHECK(plancherel_norm(grid, zero, 0) == 0.0);
    CHECK(std::abs(plancherel_norm(grid, box, 0) - 2.0) <= 1e-6);
    CHECK(plancherel_norm(grid, box, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-3));
    std::vector<double> flat(grid.size(), 1.0);
    CHECK_THROWS_AS(plancherel_norm(grid, flat, 0), NumericalError);
    CHECK_THROWS_AS(plancherel_norm(grid, box, -1), PreconditionError);
}

TEST_CASE("norm is non-increasing under damping") {
    const FourierState s = gaussian_state({1, 1, 0.5, 1, 1});
    const StatePropagator prop(s);
    double prev = plancherel_norm(s, 0);
    for (double t : {0.5, 1.0, 3.0, 10.0, 30.0, 100.0}) {
        const double n = plancherel_norm(s.grid, prop.abs2_at(t), 0);
        CHECK(n <= prev * (1 + 1e-12));
        prev = n;
    }
}

TEST_CASE("snapshot round trip") {
    const FourierState s = evolve(gaussian_state({2, 1.5, 0.5, 1, 1}, 64), 1.5);
    const auto dir = std::filesystem::temp_directory_path() / "bresse_snapshot_test";
    std::filesystem::remove_all(dir);
    const std::string base = (dir / "state").string();
    write_state(s, base);
    const FourierState r = read_state(base);
    CHECK(r.t == s.t);
    CHECK(r.params == s.params);
    CHECK(r.grid == s.grid);
    CHECK(r.values == s.values);
    CHECK(state_csv(r) == read_file(base + ".csv"));
    CHECK_THROWS_AS(parse_state_csv("x,y\n1,2\n"), PreconditionError);
    std::filesystem::remove_all(dir);
}
