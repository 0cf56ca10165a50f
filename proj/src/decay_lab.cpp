#include "bresse/decay_lab.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include <fmt/format.h>

#include "bresse/parallel.hpp"

namespace bresse {

namespace {

const CVec6 kUnitDirection = CVec6::Constant(cplx(1.0 / std::sqrt(6.0), 0.0));

double op_norm2(const CMat6& E) {
    Eigen::JacobiSVD<CMat6> svd(E);
    const double s = svd.singularValues()(0);
    return s * s;
}

double max_re(const SystemParams& p, double xi) { return eigenvalues(p, xi).max_real_part; }

std::vector<double> log_space(double a, double b, int n) {
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = a * std::pow(b / a, n == 1 ? 0.0 : double(i) / (n - 1));
    return out;
}

double slope(const std::vector<double>& x, const std::vector<double>& y, double* intercept = nullptr) {
    const double n = double(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    const double b = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    if (intercept) *intercept = (sy - b * sx) / n;
    return b;
}

void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed, const char* where) {
    if (!j.is_object()) throw PreconditionError(fmt::format("{}: expected a JSON object", where));
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed) known = known || it.key() == k;
        if (!known) throw PreconditionError(fmt::format("{}: unknown key '{}'", where, it.key()));
    }
}

double positive_number(const nlohmann::json& j, const char* key, const char* where) {
    const auto& v = j.at(key);
    if (!v.is_number() || !(v.get<double>() > 0))
        throw PreconditionError(fmt::format("{}: '{}' must be a positive number", where, key));
    return v.get<double>();
}

const char* kind_name(ProfileKind k) {
    switch (k) {
        case ProfileKind::gaussian: return "gaussian";
        case ProfileKind::box: return "box";
        case ProfileKind::high_freq_packet: return "high_freq_packet";
        case ProfileKind::conservative_mode: return "conservative_mode";
    }
    return "?";
}

/// Trapezoid over the grid restricted to segments whose midpoint lies in [lo, hi) in |xi|.
double region_integral(const std::vector<double>& grid, const std::vector<double>& f, double lo, double hi) {
    double sum = 0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        const double mid = std::abs(0.5 * (grid[i] + grid[i - 1]));
        if (mid >= lo && mid < hi) sum += 0.5 * (f[i] + f[i - 1]) * (grid[i] - grid[i - 1]);
    }
    return sum;
}

}  // namespace

std::vector<double> log_times(double t0, double t1, int n) {
    if (!(t0 > 0) || !(t1 > t0) || n < 2) throw PreconditionError("log_times: need 0 < t0 < t1 and n >= 2");
    return log_space(t0, t1, n);
}

CVec6 inverse_iteration(const SystemParams& p, double xi, cplx lambda, int iterations) {
    const SymbolMatrix s = build_symbol(p, xi);
    const cplx shift = lambda + 1e-9 * (1.0 + std::abs(lambda));
    const Eigen::PartialPivLU<CMat6> lu(s.Phi - shift * CMat6::Identity());
    CVec6 x = kUnitDirection;
    for (int it = 0; it < iterations; ++it) {
        x = lu.solve(x);
        x /= x.norm();
    }
    // Fix the phase: largest component real and positive.
    int imax = 0;
    x.cwiseAbs().maxCoeff(&imax);
    x *= std::abs(x[imax]) / x[imax];
    return x;
}

FourierState initial_state(const SystemParams& p, const Profile& prof, const std::vector<double>& grid) {
    p.validate();
    if (!(prof.width > 0)) throw PreconditionError("profile: width must be > 0");
    FourierState s;
    s.params = p;
    s.grid = grid;
    s.values.resize(grid.size());
    const double root2pi = std::sqrt(2.0 * std::numbers::pi);
    const double w = prof.width;
    switch (prof.kind) {
        case ProfileKind::gaussian:
            for (std::size_t i = 0; i < grid.size(); ++i)
                s.values[i] = root2pi * w * std::exp(-0.5 * w * w * grid[i] * grid[i]) * kUnitDirection;
            break;
        case ProfileKind::box: {
            const double h = prof.halfwidth;
            if (!(h > 0)) throw PreconditionError("profile: halfwidth must be > 0");
            for (std::size_t i = 0; i < grid.size(); ++i) {
                const double xi = grid[i];
                const double sinc = std::abs(h * xi) < 1e-8 ? 2.0 * h : 2.0 * std::sin(h * xi) / xi;
                s.values[i] = sinc * std::exp(-0.5 * w * w * xi * xi) * kUnitDirection;
            }
            break;
        }
        case ProfileKind::high_freq_packet:
            if (!(prof.center > 0)) throw PreconditionError("profile: center must be > 0");
            for (std::size_t i = 0; i < grid.size(); ++i) {
                const double d = std::abs(grid[i]) - prof.center;
                s.values[i] = std::exp(-0.5 * d * d / (w * w)) * kUnitDirection;
            }
            break;
        case ProfileKind::conservative_mode:
            if (p.gamma2 != 0)
                throw RegimeError("conservative_mode profile requires gamma2 = 0 (no undamped mode otherwise)");
            for (std::size_t i = 0; i < grid.size(); ++i) {
                const double x = std::abs(grid[i]);
                const Spectrum sp = eigenvalues(p, x);
                int best = -1;
                for (int j = 0; j < 6; ++j) {
                    const cplx l = sp.eigenvalues[j];
                    if (l.imag() <= 0) continue;
                    if (best < 0 || std::abs(l.real()) < std::abs(sp.eigenvalues[best].real())) best = j;
                }
                if (best < 0) throw NumericalError(fmt::format("conservative_mode: no eigenvalue with Im > 0 at xi={}", x));
                CVec6 v = inverse_iteration(p, x, sp.eigenvalues[best]);
                if (grid[i] < 0) v = v.conjugate();
                s.values[i] = root2pi * w * std::exp(-0.5 * w * w * x * x) * v;
            }
            break;
    }
    return s;
}

nlohmann::json to_json(const DecayFit& f) {
    return {{"j", f.j},          {"exponent", f.exponent}, {"amplitude", f.amplitude},
            {"fit_window", {f.fit_t0, f.fit_t1}}, {"max_residual", f.max_residual}, {"monotone", f.monotone},
            {"times", f.times},  {"norms", f.norms}};
}

DecayFit fit_power_law(const std::vector<double>& times, const std::vector<double>& norms, double t0, double t1) {
    if (times.size() != norms.size()) throw PreconditionError("fit_power_law: size mismatch");
    DecayFit f;
    f.times = times;
    f.norms = norms;
    f.fit_t0 = t0;
    f.fit_t1 = t1;
    std::vector<double> x, y;
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < t0 * (1 - 1e-12) || times[i] > t1 * (1 + 1e-12)) continue;
        if (!(norms[i] > 0)) throw NumericalError(fmt::format("fit_power_law: non-positive norm at t={}", times[i]));
        x.push_back(std::log1p(times[i]));
        y.push_back(std::log(norms[i]));
    }
    if (x.size() < 2) throw PreconditionError("fit_power_law: fewer than two samples in the fit window");
    double c = 0;
    f.exponent = slope(x, y, &c);
    f.amplitude = std::exp(c);
    for (std::size_t i = 0; i < x.size(); ++i) f.max_residual = std::max(f.max_residual, std::abs(y[i] - c - f.exponent * x[i]));
    for (std::size_t i = 1; i < norms.size(); ++i)
        if (times[i] > times[i - 1] && norms[i] > norms[i - 1] * (1 + 1e-9)) f.monotone = false;
    return f;
}

std::vector<DecayFit> run_decay(const Experiment& e, int threads) {
    const std::vector<double> grid = make_grid(e.grid);
    FourierState s0 = initial_state(e.params, e.profile, grid);
    s0.grid_descriptor = grid_json(e.grid);
    const std::vector<double> times = e.times.empty() ? log_times(1.0, 1e4, 41) : e.times;
    if (!std::is_sorted(times.begin(), times.end()) || times.front() < 0)
        throw PreconditionError("run_decay: times must be non-negative and increasing");
    const StatePropagator prop(s0, threads);
    std::vector<std::vector<double>> norms(e.j_orders.size(), std::vector<double>(times.size()));
    for (std::size_t ti = 0; ti < times.size(); ++ti) {
        const std::vector<double> abs2 = prop.abs2_at(times[ti]);
        for (std::size_t k = 0; k < e.j_orders.size(); ++k)
            norms[k][ti] = std::sqrt(plancherel_norm(grid, abs2, e.j_orders[k]));
    }
    double t0 = e.fit_t0, t1 = e.fit_t1;
    if (t0 == 0 && t1 == 0) {
        t1 = times.back();
        t0 = t1 / 10.0;
    }
    std::vector<DecayFit> out;
    for (std::size_t k = 0; k < e.j_orders.size(); ++k) {
        DecayFit f = fit_power_law(times, norms[k], t0, t1);
        f.j = e.j_orders[k];
        out.push_back(std::move(f));
    }
    return out;
}

PointwiseRate fit_pointwise_rate(const SystemParams& p, const std::vector<double>& xi_grid, double t_mult) {
    p.validate();
    if (p.gamma2 == 0) throw RegimeError("pointwise rate: gamma2 = 0 has no uniform decay; use vector_rate");
    PointwiseRate r;
    const bool rho1 = p.a == 1.0 && p.gamma1 > 0;
    r.shape_name = rho1 ? "rho1" : "rho2";
    r.xi = xi_grid;
    r.rate.resize(xi_grid.size());
    r.shape.resize(xi_grid.size());
    for (std::size_t i = 0; i < xi_grid.size(); ++i) {
        const double xi = xi_grid[i];
        const double sigma = -max_re(p, xi);
        if (!(sigma > 0)) throw NumericalError(fmt::format("pointwise rate: no decay at xi={}", xi));
        const double T = t_mult / (2.0 * sigma);
        r.rate[i] = -std::log(op_norm2(matrix_exp(build_symbol(p, xi), T).E)) / T;
        const double x2 = xi * xi;
        r.shape[i] = rho1 ? x2 / (1 + x2) : x2 / (1 + x2 + x2 * x2);
    }
    r.ratio_min = r.ratio_max = r.rate[0] / r.shape[0];
    for (std::size_t i = 1; i < r.rate.size(); ++i) {
        r.ratio_min = std::min(r.ratio_min, r.rate[i] / r.shape[i]);
        r.ratio_max = std::max(r.ratio_max, r.rate[i] / r.shape[i]);
    }
    return r;
}

double vector_rate(const SystemParams& p, double xi, const CVec6& U0, double T) {
    if (!(T > 0)) throw PreconditionError("vector_rate: T must be > 0");
    const PutzerPropagator prop(build_symbol(p, xi));
    const CVec6 u = prop.apply(T, U0);
    return -std::log(u.squaredNorm() / U0.squaredNorm()) / T;
}

int middle_multiplicity(const SystemParams& p, double nu, double N, int points) {
    int m = 1;
    for (double xi : log_space(nu, N, points)) {
        const Spectrum s = eigenvalues(p, xi);
        m = std::max(m, *std::max_element(s.multiplicity.begin(), s.multiplicity.end()));
    }
    return m;
}

nlohmann::json to_json(const SynthesisReport& r) {
    const RegionFit& f = r.fit;
    return {{"constants",
             {{"c1", f.c1}, {"c2", f.c2}, {"c3", f.c3}, {"c4", f.c4}, {"c5", f.c5}, {"C", f.C}, {"m", f.m}}},
            {"power_true", f.power_true},
            {"power_majorant", f.power_majorant},
            {"expected_power", f.expected_power},
            {"expected_loss", f.expected_loss},
            {"times", r.times},
            {"low", r.low},
            {"mid", r.mid},
            {"high", r.high},
            {"total", r.total},
            {"bound", r.bound},
            {"dominated", r.dominated},
            {"witness", {{"t", r.witness_t}, {"xi", r.witness_xi}}},
            {"low_exponent", r.low_fit.exponent},
            {"gap", r.gap.gap},
            {"gap_certified", r.gap.certified}};
}

SynthesisReport three_region_synthesis(const Experiment& e, const FrequencyPartition& part, int ell, int threads) {
    const SystemParams& p = e.params;
    p.validate();
    if (!(part.nu > 0 && part.nu < 1 && part.N > 1))
        throw PreconditionError("three_region_synthesis: need 0 < nu < 1 < N");
    if (ell < 0) throw PreconditionError("three_region_synthesis: ell must be >= 0");
    if (p.gamma1 != 0 || !(p.gamma2 > 0))
        throw RegimeError("three_region_synthesis: requires gamma1 = 0 and gamma2 > 0");
    if (p.stability_degenerate())
        throw RegimeError("three_region_synthesis: (k²-1)l² - 1 = 0, low-frequency branches degenerate");
    if (p.a == 1.0 && p.k != 1.0)
        throw RegimeError("three_region_synthesis: a = 1 with k != 1 has no high-frequency bound");

    SynthesisReport rep;
    RegionFit& fit = rep.fit;
    fit.expected_power = p.a == 1.0 ? 2.0 : 6.0;
    fit.expected_loss = p.a == 1.0 ? 1 : 3;

    // Pointwise fits on operator norms.
    const int samples = 16;
    const std::vector<double> t_fit = log_times(1e-2, 1e4, 33);
    const auto norms_at = [&](double xi, const std::vector<double>& ts) {
        const PutzerPropagator prop(build_symbol(p, xi));
        std::vector<double> n2(ts.size());
        for (std::size_t i = 0; i < ts.size(); ++i) n2[i] = op_norm2(prop.exp(ts[i]));
        return n2;
    };

    const std::vector<double> xi_low = log_space(std::max(e.grid.xi_min, 1e-4), part.nu, samples);
    fit.c2 = 1e300;
    for (double xi : xi_low) fit.c2 = std::min(fit.c2, 0.5 * (-2.0 * max_re(p, xi)) / (xi * xi));
    fit.c1 = 1.0;
    for (double xi : xi_low) {
        const auto n2 = norms_at(xi, t_fit);
        for (std::size_t i = 0; i < t_fit.size(); ++i) fit.c1 = std::max(fit.c1, n2[i] * std::exp(fit.c2 * xi * xi * t_fit[i]));
    }

    rep.gap = gap_scan(p, part.nu, part.N);
    if (!rep.gap.certified)
        throw NumericalError(fmt::format("three_region_synthesis: no spectral gap on [{}, {}] (witness xi={})", part.nu,
                                         part.N, rep.gap.witness_xi));
    fit.C = rep.gap.gap;
    fit.m = middle_multiplicity(p, part.nu, part.N) - 1;
    fit.c5 = 1.0;
    for (double xi : log_space(part.nu, part.N, samples)) {
        const auto n2 = norms_at(xi, t_fit);
        for (std::size_t i = 0; i < t_fit.size(); ++i) {
            const double poly = 1.0 + std::pow(xi, 2 * fit.m) * std::pow(t_fit[i], fit.m);
            fit.c5 = std::max(fit.c5, n2[i] * std::exp(fit.C * t_fit[i]) / poly);
        }
    }

    // High region: sup over t of the weighted norm and of the Putzer majorant.
    const double xi_hi = std::max(e.grid.xi_max, 100.0 * part.N);
    const std::vector<double> xi_high = log_space(part.N, xi_hi, samples);
    fit.c4 = 1e300;
    for (double xi : xi_high) fit.c4 = std::min(fit.c4, 0.5 * (-2.0 * max_re(p, xi)) * xi * xi);
    std::vector<double> lx, ltrue, lmaj, sup_true(samples);
    for (int s = 0; s < samples; ++s) {
        const double xi = xi_high[s];
        const PutzerPropagator prop(build_symbol(p, xi));
        std::array<double, 6> pn{};
        for (int j = 0; j < 6; ++j) {
            Eigen::JacobiSVD<CMat6> svd(prop.P(j).cast<cplx>());
            pn[j] = svd.singularValues()(0);
        }
        std::vector<double> ts{0.0};
        for (double t : log_times(1e-3, 20.0 * xi * xi / fit.c4, 60)) ts.push_back(t);
        double best_true = 0, best_maj = 0;
        for (double t : ts) {
            const double w = std::exp(fit.c4 * t / (xi * xi));
            best_true = std::max(best_true, op_norm2(prop.exp(t)) * w);
            const PutzerR r = putzer_r(prop.lambdas(), t);
            double maj = 0;
            for (int j = 0; j < 6; ++j) maj += double(std::abs(r.r[j])) * pn[j];
            best_maj = std::max(best_maj, maj * maj * w);
        }
        sup_true[s] = best_true;
        lx.push_back(std::log(xi));
        ltrue.push_back(0.5 * std::log(best_true));
        lmaj.push_back(0.5 * std::log(best_maj));
    }
    fit.power_true = slope(lx, ltrue);
    fit.power_majorant = slope(lx, lmaj);
    fit.c3 = 0;
    for (int s = 0; s < samples; ++s) fit.c3 = std::max(fit.c3, sup_true[s] / std::pow(xi_high[s], 2 * fit.power_true));

    // Fitted constants carry a 10% margin because they come from samples.
    fit.c1 *= 1.1;
    fit.c3 *= 1.1;
    fit.c5 *= 1.1;

    // Regional integrals of the actual solution against the assembled bound.
    const std::vector<double> grid = make_grid(e.grid);
    FourierState s0 = initial_state(p, e.profile, grid);
    const StatePropagator prop(s0, threads);
    rep.times = e.times.empty() ? log_times(1.0, 1e4, 25) : e.times;
    std::vector<double> a0(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) a0[i] = s0.values[i].squaredNorm();
    double worst_excess = 0;
    for (double t : rep.times) {
        const std::vector<double> abs2 = prop.abs2_at(t);
        std::vector<double> f(grid.size()), b(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double x = std::abs(grid[i]), w = std::pow(x, 2 * ell);
            f[i] = w * abs2[i];
            double pb;
            if (x < part.nu) pb = fit.c1 * std::exp(-fit.c2 * x * x * t);
            else if (x <= part.N) pb = fit.c5 * (1 + std::pow(x, 2 * fit.m) * std::pow(t, fit.m)) * std::exp(-fit.C * t);
            else pb = fit.c3 * std::pow(x, 2 * fit.power_true) * std::exp(-fit.c4 * t / (x * x));
            b[i] = w * pb * a0[i];
            const double excess = f[i] - b[i];
            if (excess > worst_excess) {
                worst_excess = excess;
                rep.witness_t = t;
                rep.witness_xi = grid[i];
            }
        }
        rep.low.push_back(region_integral(grid, f, 0.0, part.nu));
        rep.mid.push_back(region_integral(grid, f, part.nu, part.N));
        rep.high.push_back(region_integral(grid, f, part.N, 1e300));
        rep.total.push_back(rep.low.back() + rep.mid.back() + rep.high.back());
        double bt = 0;
        for (std::size_t i = 1; i < grid.size(); ++i) bt += 0.5 * (b[i] + b[i - 1]) * (grid[i] - grid[i - 1]);
        rep.bound.push_back(bt);
        if (rep.total.back() > bt * (1 + 1e-9)) rep.dominated = false;
    }
    std::vector<double> low_norm(rep.low.size());
    for (std::size_t i = 0; i < low_norm.size(); ++i) low_norm[i] = std::sqrt(rep.low[i]);
    rep.low_fit = fit_power_law(rep.times, low_norm, rep.times.back() / 100.0, rep.times.back());
    rep.low_fit.j = ell;
    return rep;
}

nlohmann::json to_json(const OptimalityReport& r) {
    return {{"xi_low", r.xi_low},           {"ratio_low", r.ratio_low},
            {"fitted_c", r.fitted_c},       {"ratio_min", r.ratio_min},
            {"ratio_max", r.ratio_max},     {"high_rate_min", r.high_rate_min},
            {"high_rate_exponent", r.high_rate_exponent}, {"lyapunov_c3", r.lyapunov_c3}};
}

OptimalityReport optimality_probe(const SystemParams& p) {
    const LyapunovConstants c = search_constants(p);
    OptimalityReport r;
    r.lyapunov_c3 = c.use_L2 ? c.c4 : c.c3;
    r.xi_low = log_space(0.01, 0.1, 20);
    std::vector<double> spec(r.xi_low.size()), shape(r.xi_low.size());
    double mean_log = 0;
    for (std::size_t i = 0; i < r.xi_low.size(); ++i) {
        const double x2 = r.xi_low[i] * r.xi_low[i];
        spec[i] = -2.0 * max_re(p, r.xi_low[i]);
        shape[i] = c.use_L2 ? x2 / (1 + x2 + x2 * x2) : x2 / (1 + x2);
        mean_log += std::log(spec[i] / shape[i]);
    }
    r.fitted_c = std::exp(mean_log / double(spec.size()));
    r.ratio_min = 1e300;
    r.ratio_max = 0;
    for (std::size_t i = 0; i < spec.size(); ++i) {
        r.ratio_low.push_back(r.fitted_c * shape[i] / spec[i]);
        r.ratio_min = std::min(r.ratio_min, r.ratio_low.back());
        r.ratio_max = std::max(r.ratio_max, r.ratio_low.back());
    }
    std::vector<double> lx, ly;
    r.high_rate_min = 1e300;
    for (double xi : log_space(100.0, 1000.0, 10)) {
        const double s = -max_re(p, xi);
        r.high_rate_min = std::min(r.high_rate_min, 2.0 * s);
        lx.push_back(std::log(xi));
        ly.push_back(std::log(s));
    }
    r.high_rate_exponent = slope(lx, ly);
    return r;
}

PacketDecay packet_decay_time(const SystemParams& p, double xi0, int threads) {
    p.validate();
    if (!(xi0 > 0)) throw PreconditionError("packet_decay_time: xi0 must be > 0");
    if (!(p.gamma2 > 0)) throw RegimeError("packet_decay_time: requires gamma2 > 0");
    const double width = xi0 / 50.0;
    const int half = 256;
    std::vector<double> pos(half);
    for (int i = 0; i < half; ++i) pos[i] = xi0 - 8 * width + 16 * width * double(i) / (half - 1);
    std::vector<double> grid;
    for (auto it = pos.rbegin(); it != pos.rend(); ++it) grid.push_back(-*it);
    grid.insert(grid.end(), pos.begin(), pos.end());
    Profile prof;
    prof.kind = ProfileKind::high_freq_packet;
    prof.center = xi0;
    prof.width = width;
    const FourierState s0 = initial_state(p, prof, grid);
    const StatePropagator prop(s0, threads);
    const double n0 = plancherel_norm(s0, 0);
    const auto ratio = [&](double t) { return std::sqrt(plancherel_norm(grid, prop.abs2_at(t), 0) / n0); };

    const double tau = 1.0 / -max_re(p, xi0);
    const auto crossing = [&](double level) {
        double lo = 0, hi = 0.01 * tau;
        while (ratio(hi) > level) {
            lo = hi;
            hi *= 1.5;
            if (hi > 1e3 * tau) throw NumericalError(fmt::format("packet_decay_time: no decay below {} at xi0={}", level, xi0));
        }
        for (int it = 0; it < 50 && hi - lo > 1e-10 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            (ratio(mid) > level ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    };
    PacketDecay d;
    d.xi0 = xi0;
    d.t_e1 = crossing(std::exp(-1.0));
    d.t_e2 = crossing(std::exp(-2.0));
    d.decay_time = d.t_e2 - d.t_e1;
    return d;
}

Experiment experiment_from_json(const nlohmann::json& j) {
    check_keys(j, {"params", "profile", "grid", "times", "j_orders", "fit_window"}, "experiment");
    if (!j.contains("params")) throw PreconditionError("experiment: missing key 'params'");
    Experiment e;
    e.params = j.at("params").get<SystemParams>();
    if (j.contains("profile")) {
        const auto& pj = j.at("profile");
        check_keys(pj, {"kind", "width", "halfwidth", "center"}, "profile");
        if (!pj.contains("kind") || !pj.at("kind").is_string()) throw PreconditionError("profile: missing string 'kind'");
        const std::string kind = pj.at("kind").get<std::string>();
        if (kind == "gaussian") e.profile.kind = ProfileKind::gaussian;
        else if (kind == "box") e.profile.kind = ProfileKind::box;
        else if (kind == "high_freq_packet") e.profile.kind = ProfileKind::high_freq_packet;
        else if (kind == "conservative_mode") e.profile.kind = ProfileKind::conservative_mode;
        else throw PreconditionError(fmt::format("profile: unknown kind '{}'", kind));
        if (pj.contains("width")) e.profile.width = positive_number(pj, "width", "profile");
        if (pj.contains("halfwidth")) e.profile.halfwidth = positive_number(pj, "halfwidth", "profile");
        if (pj.contains("center")) e.profile.center = positive_number(pj, "center", "profile");
    }
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        check_keys(g, {"n", "xi_min", "xi_max"}, "grid");
        if (g.contains("n")) {
            if (!g.at("n").is_number_integer()) throw PreconditionError("grid: 'n' must be an integer");
            e.grid.n = g.at("n").get<int>();
        }
        if (g.contains("xi_min")) e.grid.xi_min = positive_number(g, "xi_min", "grid");
        if (g.contains("xi_max")) e.grid.xi_max = positive_number(g, "xi_max", "grid");
        make_grid(e.grid);
    }
    if (j.contains("times")) {
        const auto& t = j.at("times");
        if (!t.is_array() || t.size() < 2) throw PreconditionError("experiment: 'times' must be an array of >= 2 numbers");
        for (const auto& v : t) {
            if (!v.is_number() || v.get<double>() < 0) throw PreconditionError("experiment: times must be non-negative numbers");
            e.times.push_back(v.get<double>());
        }
        if (std::adjacent_find(e.times.begin(), e.times.end(), std::greater_equal<>()) != e.times.end())
            throw PreconditionError("experiment: times must be strictly increasing");
    }
    if (j.contains("j_orders")) {
        e.j_orders.clear();
        for (const auto& v : j.at("j_orders")) {
            if (!v.is_number_integer() || v.get<int>() < 0)
                throw PreconditionError("experiment: j_orders must be non-negative integers");
            e.j_orders.push_back(v.get<int>());
        }
        if (e.j_orders.empty()) throw PreconditionError("experiment: j_orders is empty");
    }
    if (j.contains("fit_window")) {
        const auto& w = j.at("fit_window");
        if (!w.is_array() || w.size() != 2 || !w[0].is_number() || !w[1].is_number())
            throw PreconditionError("experiment: 'fit_window' must be [t0, t1]");
        e.fit_t0 = w[0].get<double>();
        e.fit_t1 = w[1].get<double>();
        if (!(e.fit_t0 >= 0 && e.fit_t1 > e.fit_t0)) throw PreconditionError("experiment: fit_window needs 0 <= t0 < t1");
    }
    return e;
}

nlohmann::json to_json(const Experiment& e) {
    nlohmann::json j{{"params", e.params},
                     {"profile",
                      {{"kind", kind_name(e.profile.kind)},
                       {"width", e.profile.width},
                       {"halfwidth", e.profile.halfwidth},
                       {"center", e.profile.center}}},
                     {"grid", {{"n", e.grid.n}, {"xi_min", e.grid.xi_min}, {"xi_max", e.grid.xi_max}}},
                     {"j_orders", e.j_orders}};
    if (!e.times.empty()) j["times"] = e.times;
    if (e.fit_t0 != 0 || e.fit_t1 != 0) j["fit_window"] = {e.fit_t0, e.fit_t1};
    return j;
}

}  // namespace bresse
