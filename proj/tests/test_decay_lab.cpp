#include <cmath>

#include "bresse/decay_lab.hpp"
#include "doctest.h"

using namespace bresse;

namespace {

const SystemParams kA1{1, 1, 0.5, 1, 1};
const SystemParams kA2{2, 1.5, 0.7, 0.3, 2};

std::vector<double> log_space(double a, double b, int n) { return log_times(a, b, n); }

}  // namespace

TEST_CASE("log_times and fit_power_law") {
    const auto t = log_times(1, 1e4, 5);
    REQUIRE(t.size() == 5);
    CHECK(t.front() == doctest::Approx(1));
    CHECK(t[2] == doctest::Approx(100));
    CHECK(t.back() == doctest::Approx(1e4));
    CHECK_THROWS_AS(log_times(0, 1, 3), PreconditionError);

    std::vector<double> ts = log_times(1, 1e4, 41), n;
    for (double x : ts) n.push_back(3.0 * std::pow(1 + x, -0.75));
    const DecayFit f = fit_power_law(ts, n, 100, 1e4);
    CHECK(f.exponent == doctest::Approx(-0.75).epsilon(1e-12));
    CHECK(f.amplitude == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(f.max_residual < 1e-12);
    CHECK(f.monotone);
    CHECK(f.fit_t0 >= 100 * (1 - 1e-12));
    CHECK(f.fit_t1 <= 1e4 * (1 + 1e-12));

    n[10] *= 2;
    const DecayFit g = fit_power_law(ts, n, 1, 1e4);
    CHECK_FALSE(g.monotone);
    CHECK(g.max_residual > 0.1);
    CHECK_THROWS_AS(fit_power_law(ts, n, 2e4, 3e4), PreconditionError);
}

TEST_CASE("initial profiles") {
    const auto grid = make_grid({64, 0.01, 5});
    SUBCASE("gaussian") {
        const FourierState s = initial_state(kA1, {ProfileKind::gaussian, 2.0}, grid);
        CHECK(hermitian_defect(s) == 0.0);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double amp = std::sqrt(2 * M_PI) * 2 * std::exp(-2 * grid[i] * grid[i]);
            CHECK(s.values[i].norm() == doctest::Approx(amp));
        }
    }
    SUBCASE("box") {
        const FourierState s = initial_state(kA1, {ProfileKind::box, 0.1, 3.0}, grid);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double x = grid[i];
            const double amp = std::abs(2 * std::sin(3 * x) / x) * std::exp(-0.005 * x * x);
            CHECK(s.values[i].norm() == doctest::Approx(amp).scale(1));
        }
    }
    SUBCASE("packet") {
        const FourierState s = initial_state(kA1, {ProfileKind::high_freq_packet, 0.5, 1, 4.0}, grid);
        double best = 0, at = 0;
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (s.values[i].norm() > best) {
                best = s.values[i].norm();
                at = std::abs(grid[i]);
            }
        CHECK(std::abs(at - 4.0) < 0.2);
    }
    SUBCASE("conservative mode needs gamma2 = 0") {
        CHECK_THROWS_AS(initial_state(kA1, {ProfileKind::conservative_mode}, grid), RegimeError);
        const SystemParams p{1, 1, 0.5, 1, 0};
        const FourierState s = initial_state(p, {ProfileKind::conservative_mode}, grid);
        CHECK(hermitian_defect(s) < 1e-12);
        for (std::size_t i = 0; i < grid.size(); i += 7) {
            const CVec6 U = s.values[i];
            if (U.norm() == 0) continue;
            const CVec6 PU = build_symbol(p, grid[i]).Phi * U;
            const cplx lam = U.dot(PU) / U.squaredNorm();
            CHECK(std::abs(lam.real()) < 1e-10);
            CHECK((PU - lam * U).norm() < 1e-9 * U.norm() * (1 + std::abs(lam)));
        }
    }
}

TEST_CASE("inverse_iteration") {
    const SystemParams p{1, 1, 0.5, 1, 0};
    const double xi = 1.3;
    const Spectrum s = eigenvalues(p, xi);
    for (const cplx& lam : s.eigenvalues) {
        const CVec6 v = inverse_iteration(p, xi, lam);
        CHECK(v.norm() == doctest::Approx(1.0));
        CHECK((build_symbol(p, xi).Phi * v - lam * v).norm() < 1e-9 * (1 + std::abs(lam)));
    }
}

TEST_CASE("decay exponents for gaussian data, a = 1") {
    Experiment e;
    e.params = kA1;
    e.j_orders = {0, 1};
    e.fit_t0 = 100;
    e.fit_t1 = 1e4;
    const auto fits = run_decay(e);
    REQUIRE(fits.size() == 2);
    CHECK(fits[0].j == 0);
    CHECK(std::abs(fits[0].exponent - -0.25) <= 0.025);
    CHECK(std::abs(fits[1].exponent - -0.75) <= 0.075);
    for (const auto& f : fits) {
        CHECK(f.monotone);
        CHECK(f.max_residual < 0.05);
        CHECK(f.norms.size() == f.times.size());
    }
    const auto j = to_json(fits[0]);
    CHECK(j.at("exponent").get<double>() == fits[0].exponent);
    CHECK(j.contains("max_residual"));
}

TEST_CASE("gamma2 = 0: conservative mode does not decay") {
    Experiment e;
    e.params = {1, 1, 0.5, 1, 0};
    e.profile.kind = ProfileKind::conservative_mode;
    e.grid = {1024, 1e-3, 10};
    e.times = log_times(1, 1e3, 31);
    const auto fits = run_decay(e);
    CHECK(fits[0].exponent >= -0.02);

    Experiment lin = e;
    lin.times.clear();
    for (int i = 0; i <= 50; ++i) lin.times.push_back(20.0 * i);
    const auto f = run_decay(lin)[0];
    const double n0 = f.norms.front();
    for (double n : f.norms) {
        CHECK(n / n0 <= 1 + 1e-6);
        CHECK(n / n0 >= 0.99);
    }
}

TEST_CASE("pointwise rates") {
    const auto xs = log_space(0.01, 100, 25);
    SUBCASE("a = 1 follows rho1") {
        const PointwiseRate r = fit_pointwise_rate(kA1, xs);
        CHECK(r.shape_name == "rho1");
        CHECK(r.ratio_min > 0.1);
        CHECK(r.ratio_max < 10);
        CHECK(r.ratio_min <= r.ratio_max);
    }
    SUBCASE("a = 2: rate * xi^2 bounded for xi >= 10") {
        const PointwiseRate r = fit_pointwise_rate({2, 1, 0.5, 1, 1}, log_space(10, 1000, 15));
        CHECK(r.shape_name == "rho2");
        double lo = INFINITY, hi = 0;
        for (std::size_t i = 0; i < r.xi.size(); ++i) {
            lo = std::min(lo, r.rate[i] * r.xi[i] * r.xi[i]);
            hi = std::max(hi, r.rate[i] * r.xi[i] * r.xi[i]);
        }
        CHECK(lo > 0.1);
        CHECK(hi < 10);
        CHECK(hi / lo < 3);
    }
    SUBCASE("gamma2 = 0") {
        const SystemParams p{1, 1.5, 0.7, 0.4, 0};
        CHECK_THROWS_AS(fit_pointwise_rate(p, xs), RegimeError);
        for (double xi : {0.3, 1.0, 4.0}) {
            const Spectrum s = eigenvalues(p, xi);
            cplx cons(INFINITY, 0);
            for (const cplx& z : s.eigenvalues)
                if (z.imag() > 0 && std::abs(z.real()) < std::abs(cons.real())) cons = z;
            const CVec6 U0 = inverse_iteration(p, xi, cons);
            CHECK(std::abs(vector_rate(p, xi, U0, 100.0)) <= 1e-8);
        }
    }
}

TEST_CASE("three-region synthesis") {
    Experiment e;
    e.params = {1, 1, 0.5, 0, 1};
    e.grid = {1024, 1e-4, 10};
    SUBCASE("bound dominates and partition does not matter") {
        const SynthesisReport r = three_region_synthesis(e, {}, 0);
        CHECK(r.dominated);
        CHECK(r.gap.certified);
        CHECK(r.gap.gap > 0);
        CHECK(r.fit.expected_power == 2.0);
        CHECK(r.fit.expected_loss == 1);
        CHECK(r.fit.c1 > 0);
        CHECK(r.fit.c2 > 0);
        CHECK(r.fit.c4 > 0);
        CHECK(r.fit.C > 0);
        for (std::size_t i = 0; i < r.times.size(); ++i) {
            CHECK(r.total[i] <= r.bound[i]);
            CHECK(r.total[i] == doctest::Approx(r.low[i] + r.mid[i] + r.high[i]));
        }
        for (FrequencyPartition part : {FrequencyPartition{0.02, 20}, FrequencyPartition{0.1, 100}}) {
            const SynthesisReport q = three_region_synthesis(e, part, 0);
            for (std::size_t i = 0; i < r.times.size(); ++i) CHECK(q.total[i] == doctest::Approx(r.total[i]).epsilon(0.01));
        }
        const auto j = to_json(r);
        CHECK(j.contains("low_exponent"));
    }
    SUBCASE("low region alone decays like (1+t)^(-1/4 - j/2)") {
        e.times = log_times(1, 1e6, 31);
        for (int j : {0, 1}) {
            const SynthesisReport r = three_region_synthesis(e, {}, j);
            const double expect = -0.25 - 0.5 * j;
            CHECK(std::abs(r.low_fit.exponent - expect) <= 0.1 * std::abs(expect));
        }
    }
    SUBCASE("a != 1 expects three lost derivatives") {
        e.params = {2, 1.5, 0.5, 0, 1};
        const SynthesisReport r = three_region_synthesis(e, {}, 0);
        CHECK(r.fit.expected_power == 6.0);
        CHECK(r.fit.expected_loss == 3);
        CHECK(r.dominated);
    }
    SUBCASE("refusals") {
        e.params = kA1;
        CHECK_THROWS_AS(three_region_synthesis(e, {}, 0), RegimeError);
        e.params = {1, 1, 0.5, 0, 0};
        CHECK_THROWS_AS(three_region_synthesis(e, {}, 0), RegimeError);
        e.params = {1, std::sqrt(5.0), 0.5, 0, 1};  // (k^2 - 1) l^2 - 1 = 0
        CHECK_THROWS_AS(three_region_synthesis(e, {}, 0), RegimeError);
        e.params = {1, 2, 0.5, 0, 1};
        CHECK_THROWS_AS(three_region_synthesis(e, {}, 0), RegimeError);
        e.params = {1, 1, 0.5, 0, 1};
        CHECK_THROWS_AS(three_region_synthesis(e, {2.0, 50}, 0), PreconditionError);
        CHECK_THROWS_AS(three_region_synthesis(e, {0.05, 0.5}, 0), PreconditionError);
    }
}

TEST_CASE("optimality probe") {
    const OptimalityReport a1 = optimality_probe(kA1);
    CHECK(a1.ratio_min >= 0.5);
    CHECK(a1.ratio_max <= 2.0);
    CHECK(a1.high_rate_min > 0.1 * std::min(kA1.gamma1, kA1.gamma2));
    CHECK(std::abs(a1.high_rate_exponent) < 0.05);

    const OptimalityReport a2 = optimality_probe(kA2);
    CHECK(a2.ratio_min >= 0.5);
    CHECK(a2.ratio_max <= 2.0);
    CHECK(a2.high_rate_exponent == doctest::Approx(-2.0).epsilon(0.02));
}

TEST_CASE("high-frequency packets") {
    SUBCASE("a = 2: decay time scales like xi0^2") {
        const SystemParams p{2, 1.5, 0.7, 0.3, 2};
        const double t10 = packet_decay_time(p, 10).decay_time;
        const double t20 = packet_decay_time(p, 20).decay_time;
        const double t40 = packet_decay_time(p, 40).decay_time;
        CHECK(std::abs(t20 / t10 / 4 - 1) <= 0.1);
        CHECK(std::abs(t40 / t20 / 4 - 1) <= 0.1);
    }
    SUBCASE("a = 1: decay time independent of xi0") {
        const double t10 = packet_decay_time(kA1, 10).decay_time;
        const auto d40 = packet_decay_time(kA1, 40);
        CHECK(d40.t_e2 > d40.t_e1);
        CHECK(std::abs(d40.decay_time / t10 - 1) <= 0.1);
    }
}

TEST_CASE("experiment JSON is strict") {
    const nlohmann::json ok = {{"params", kA1},
                               {"profile", {{"kind", "box"}, {"halfwidth", 2.0}}},
                               {"grid", {{"n", 256}, {"xi_min", 1e-3}, {"xi_max", 5.0}}},
                               {"times", {1.0, 10.0, 100.0}},
                               {"j_orders", {0, 2}},
                               {"fit_window", {1.0, 100.0}}};
    const Experiment e = experiment_from_json(ok);
    CHECK(e.profile.kind == ProfileKind::box);
    CHECK(e.profile.halfwidth == 2.0);
    CHECK(e.grid.n == 256);
    CHECK(e.j_orders == std::vector<int>{0, 2});
    CHECK(experiment_from_json(to_json(e)).times == e.times);

    auto bad = ok;
    bad["profile"]["kind"] = "sawtooth";
    CHECK_THROWS_AS(experiment_from_json(bad), PreconditionError);
    bad = ok;
    bad["fitWindow"] = {1, 2};
    CHECK_THROWS_AS(experiment_from_json(bad), PreconditionError);
    bad = ok;
    bad["times"] = {1.0, 1.0, 2.0};
    CHECK_THROWS_AS(experiment_from_json(bad), PreconditionError);
    bad = ok;
    bad["j_orders"] = {-1};
    CHECK_THROWS_AS(experiment_from_json(bad), PreconditionError);
    bad = ok;
    bad.erase("params");
    CHECK_THROWS_AS(experiment_from_json(bad), PreconditionError);
}
