#include "bresse/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "bresse/io.hpp"
#include "bresse/polyroots.hpp"

namespace bresse {

std::array<int, 6> cluster_labels(const std::array<cplx, 6>& lam, double tol) {
    std::array<int, 6> label;
    std::iota(label.begin(), label.end(), 0);
    auto find = [&](int i) {
        while (label[i] != i) i = label[i];
        return i;
    };
    for (int i = 0; i < 6; ++i)
        for (int j = i + 1; j < 6; ++j) {
            const double scale = 1.0 + std::max(std::abs(lam[i]), std::abs(lam[j]));
            if (std::abs(lam[i] - lam[j]) <= tol * scale) label[find(j)] = find(i);
        }
    for (int i = 0; i < 6; ++i) label[i] = find(i);
    return label;
}

Spectrum eigenvalues(const SystemParams& p, double xi) {
    p.validate();
    if (!std::isfinite(xi)) throw PreconditionError("eigenvalues: xi must be finite");
    const PolishResult r = symbol_roots(p, xi);
    Spectrum s;
    s.xi = xi;
    s.eigenvalues = r.roots;
    std::sort(s.eigenvalues.begin(), s.eigenvalues.end(), [](cplx x, cplx y) {
        return x.imag() != y.imag() ? x.imag() < y.imag() : x.real() < y.real();
    });
    const CharPoly cp = char_poly(p, cplx(0.0, xi));
    for (const cplx& z : s.eigenvalues) {
        if (std::abs(cp(z)) > 1e-8 * (1.0 + std::pow(std::abs(z), 6)))
            throw NumericalError(fmt::format("eigenvalues: root {}+{}i not converged at xi={} (|p|={})", z.real(),
                                             z.imag(), xi, std::abs(cp(z))));
    }
    const auto label = cluster_labels(s.eigenvalues);
    for (int i = 0; i < 6; ++i) s.multiplicity[i] = static_cast<int>(std::count(label.begin(), label.end(), label[i]));
    s.max_real_part = -INFINITY;
    for (const cplx& z : s.eigenvalues) s.max_real_part = std::max(s.max_real_part, z.real());
    return s;
}

void match_branches(std::vector<Spectrum>& scan) {
    std::array<int, 6> perm;
    for (std::size_t n = 1; n < scan.size(); ++n) {
        // Linear predictor from the two previous points when available.
        std::array<cplx, 6> pred = scan[n - 1].eigenvalues;
        if (n >= 2) {
            const double h0 = scan[n - 1].xi - scan[n - 2].xi, h1 = scan[n].xi - scan[n - 1].xi;
            if (h0 != 0.0)
                for (int j = 0; j < 6; ++j)
                    pred[j] += (scan[n - 1].eigenvalues[j] - scan[n - 2].eigenvalues[j]) * (h1 / h0);
        }
        std::iota(perm.begin(), perm.end(), 0);
        std::array<int, 6> best = perm;
        double best_cost = INFINITY;
        do {
            double cost = 0;
            for (int j = 0; j < 6 && cost < best_cost; ++j) cost += std::abs(scan[n].eigenvalues[perm[j]] - pred[j]);
            if (cost < best_cost) {
                best_cost = cost;
                best = perm;
            }
        } while (std::next_permutation(perm.begin(), perm.end()));
        Spectrum& s = scan[n];
        auto ev = s.eigenvalues;
        auto mult = s.multiplicity;
        for (int j = 0; j < 6; ++j) {
            s.eigenvalues[j] = ev[best[j]];
            s.multiplicity[j] = mult[best[j]];
        }
    }
}

std::vector<Spectrum> spectrum_scan(const SystemParams& p, const std::vector<double>& grid, int threads) {
    std::vector<Spectrum> out(grid.size());
    threads = std::max(1, threads);
    if (threads == 1 || grid.size() < 64) {
        for (std::size_t i = 0; i < grid.size(); ++i) out[i] = eigenvalues(p, grid[i]);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errs(threads);
        for (int t = 0; t < threads; ++t)
            pool.emplace_back([&, t] {
                try {
                    for (std::size_t i = t; i < grid.size(); i += threads) out[i] = eigenvalues(p, grid[i]);
                } catch (...) {
                    errs[t] = std::current_exception();
                }
            });
        for (auto& th : pool) th.join();
        for (auto& e : errs)
            if (e) std::rethrow_exception(e);
    }
    match_branches(out);
    return out;
}

AsymRegime asym_regime(const SystemParams& p) {
    p.validate();
    if (p.gamma2 <= 0.0) throw RegimeError("asymptotics: gamma2 > 0 required");
    return p.gamma1 > 0.0 ? AsymRegime::both_damped : AsymRegime::gamma1_zero;
}

std::array<cplx, 3> sigma_roots(const SystemParams& p) {
    const Spectrum s = eigenvalues(p, 0.0);
    const double kl = p.k * p.l;
    std::vector<cplx> rest(s.eigenvalues.begin(), s.eigenvalues.end());
    for (cplx target : {cplx(0, 0), cplx(0, kl), cplx(0, -kl)}) {
        auto it = std::min_element(rest.begin(), rest.end(),
                                   [&](cplx x, cplx y) { return std::abs(x - target) < std::abs(y - target); });
        rest.erase(it);
    }
    std::sort(rest.begin(), rest.end(), [](cplx x, cplx y) {
        return x.imag() != y.imag() ? x.imag() < y.imag() : x.real() < y.real();
    });
    return {rest[0], rest[1], rest[2]};
}

CubicVariantReport cubic_variant_report(const SystemParams& p) {
    const auto sig = sigma_roots(p);
    const double g1 = p.gamma1, g2 = p.gamma2, l2 = p.l * p.l;
    auto resid = [&](double X) {
        double worst = 0;
        for (cplx z : sig) {
            const cplx v = z * z * z + (g1 + g2) * z * z + (l2 + 1 + X) * z + (g1 * l2 + g2);
            worst = std::max(worst, std::abs(v) / (1 + std::pow(std::abs(z), 3)));
        }
        return worst;
    };
    CubicVariantReport r;
    r.residual_product = resid(g1 * g2);
    r.residual_sum = resid(g1 + g2);
    const bool prod = r.residual_product < 1e-10, sum = r.residual_sum < 1e-10;
    r.matches = prod && sum ? "both" : prod ? "product" : sum ? "sum" : "neither";
    return r;
}

namespace {

void fill_beta(const SystemParams& p, AsymptoticCoeffs& c) {
    const double k = p.k, l = p.l, g1 = p.gamma1, g2 = p.gamma2;
    const double k2 = k * k, l2 = l * l;
    c.A = k2 * l2 * (k2 * (1 + l2) - k2 * k2 * l2 + g1 * g2);
    c.B = k2 * k * l2 * l * (g1 * (k2 - 1) + g2);
    c.C = 2 * k2 * l2 * (g1 * l2 * (k2 - 1) + g2 * (k2 * l2 - 1));
    c.D = 2 * k2 * k * l2 * l * (l2 * (k2 - 1) - 1 - g1 * g2);
    c.beta = -cplx(c.A, c.B) / cplx(c.C, c.D);
}

void fill_hat(const SystemParams& p, AsymptoticCoeffs& c) {
    const double k = p.k, l = p.l, g2 = p.gamma2, k2 = k * k, l2 = l * l;
    const double s = p.stability_defect();
    const double den = 2 * (g2 * g2 * (k2 * l2 - 1) * (k2 * l2 - 1) + k2 * l2 * s * s);
    c.beta_hat = g2 * k2 * s * s / den;
    const double t = k - k * (k2 - 1) * l2;
    c.delta_hat = -k * l * (g2 * g2 * (k2 * l2 - 1) + t * t) / den;
}

}  // namespace

AsymptoticCoeffs low_freq_expansion(const SystemParams& p) {
    AsymptoticCoeffs c;
    c.regime = asym_regime(p);
    const double a2 = p.a * p.a, l2 = p.l * p.l;
    c.sigma = sigma_roots(p);
    if (c.regime == AsymRegime::both_damped) {
        fill_beta(p, c);
        c.low_freq.push_back({"j1", 1, -a2 * l2 / (p.gamma1 * l2 + p.gamma2), 2});
        c.low_freq.push_back({"j23", 2, -c.beta.real(), 2});
    } else {
        if (p.stability_degenerate())
            throw RegimeError("low_freq_expansion: (k^2-1) l^2 - 1 = 0, beta_hat vanishes");
        fill_hat(p, c);
        c.low_freq.push_back({"j1", 1, -a2 * l2 / p.gamma2, 2});
        c.low_freq.push_back({"j23", 2, -c.beta_hat, 2});
    }
    for (int j = 0; j < 3; ++j) c.low_freq.push_back({fmt::format("j{}", 4 + j), 1, c.sigma[j].real(), 0});
    return c;
}

AsymptoticCoeffs high_freq_expansion(const SystemParams& p) {
    AsymptoticCoeffs c;
    c.regime = asym_regime(p);
    const double a = p.a, l2 = p.l * p.l, g1 = p.gamma1, g2 = p.gamma2;
    const double s = (a * a - 1) * (a * a - 1);
    if (c.regime == AsymRegime::both_damped) {
        const cplx root = std::sqrt(cplx(g1 * g1 - 4.0, 0.0));
        c.delta = {(-g1 + root) / 4.0, (-g1 - root) / 4.0};
        if (a == 1.0) {
            c.high_freq.push_back({"delta_1", 1, c.delta[0].real(), 0});
            c.high_freq.push_back({"delta_2", 1, c.delta[1].real(), 0});
        } else {
            c.kappa = (s * l2 * g2 + g1) / (2 * s);
            c.high_freq.push_back({"j12", 2, -c.kappa, -2});
        }
        c.high_freq.push_back({"j34", 2, -g1 / 2, 0});
        c.high_freq.push_back({"j56", 2, -g2 / 2, 0});
    } else {
        if (a == 1.0 && p.k != 1.0)
            throw RegimeError("high_freq_expansion: gamma1 = 0 with a = 1, k != 1 is not covered");
        c.high_freq.push_back({"j12", 2, -l2 * g2 / 2, -2});
        if (a == 1.0)
            c.high_freq.push_back({"j34", 2, -g2 / 6, 0});
        else
            c.high_freq.push_back({"j34", 2, -l2 * g2 / (2 * s), -4});
        c.high_freq.push_back({"j56", 2, -g2 / 2, 0});
    }
    return c;
}

const char* to_string(CardanoVerdict v) {
    switch (v) {
        case CardanoVerdict::one_real_pair_conjugate: return "one_real_pair_conjugate";
        case CardanoVerdict::three_distinct_real: return "three_distinct_real";
        case CardanoVerdict::real_plus_double: return "real_plus_double";
    }
    return "?";
}

double cardano_D_closed_form(double l, double gamma2) {
    const double l2 = l * l, w = gamma2 * gamma2;
    return (4 * w * w - (l2 * l2 + 20 * l2 - 8) * w + 4 * std::pow(l2 + 1, 3)) / 108.0;
}

CardanoClass cardano_classify(const SystemParams& p, double tol) {
    p.validate();
    if (p.gamma1 != 0.0) throw RegimeError("cardano_classify: requires gamma1 = 0");
    const double l2 = p.l * p.l, g = p.gamma2;
    CardanoClass c;
    c.Q = (3 * (l2 + 1) - g * g) / 9.0;
    c.R = (9 * g * (l2 + 1) - 2 * g * g * g - 27 * g) / 54.0;
    c.D = c.Q * c.Q * c.Q + c.R * c.R;
    if (l2 > 8) {
        const double b = l2 * l2 + 20 * l2 - 8, r = p.l * std::pow(l2 - 8, 1.5);
        c.has_thresholds = true;
        c.gamma_hat_1 = (b + r) / 8;
        c.gamma_hat_2 = (b - r) / 8;
    }
    const double scale = std::max({1.0, std::abs(c.Q * c.Q * c.Q), c.R * c.R});
    if (std::abs(c.D) <= tol * scale)
        c.verdict = CardanoVerdict::real_plus_double;
    else
        c.verdict = c.D > 0 ? CardanoVerdict::one_real_pair_conjugate : CardanoVerdict::three_distinct_real;
    return c;
}

GapCertificate gap_scan(const SystemParams& p, double nu, double N, int initial_points, double imag_tol) {
    p.validate();
    if (!(nu > 0) || !(nu < N)) throw PreconditionError("gap_scan: need 0 < nu < N");
    if (initial_points < 2) throw PreconditionError("gap_scan: initial_points must be >= 2");
    GapCertificate g;
    g.nu = nu;
    g.N = N;
    std::vector<std::pair<double, double>> pts;  // (xi, max Re)
    auto eval = [&](double xi) { return eigenvalues(p, xi).max_real_part; };
    for (int i = 0; i < initial_points; ++i) {
        const double xi = nu * std::pow(N / nu, double(i) / (initial_points - 1));
        pts.emplace_back(xi, eval(xi));
    }
    const double min_width = (N - nu) / 16384.0;
    double prev = -INFINITY;
    int stable = 0;
    for (int depth = 0; depth < 200; ++depth) {
        std::sort(pts.begin(), pts.end());
        auto top = std::max_element(pts.begin(), pts.end(),
                                    [](const auto& x, const auto& y) { return x.second < y.second; });
        const double current = top->second;
        if (current >= -imag_tol) break;
        // Bisect around the three largest local maxima.
        std::vector<std::size_t> peaks;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const bool left = i == 0 || pts[i].second >= pts[i - 1].second;
            const bool right = i + 1 == pts.size() || pts[i].second >= pts[i + 1].second;
            if (left && right) peaks.push_back(i);
        }
        std::sort(peaks.begin(), peaks.end(), [&](std::size_t x, std::size_t y) { return pts[x].second > pts[y].second; });
        if (peaks.size() > 3) peaks.resize(3);
        std::vector<double> fresh;
        for (std::size_t i : peaks) {
            if (i > 0 && pts[i].first - pts[i - 1].first > min_width) fresh.push_back(0.5 * (pts[i].first + pts[i - 1].first));
            if (i + 1 < pts.size() && pts[i + 1].first - pts[i].first > min_width)
                fresh.push_back(0.5 * (pts[i].first + pts[i + 1].first));
        }
        g.refinement_depth = depth + 1;
        if (fresh.empty()) break;
        for (double xi : fresh) pts.emplace_back(xi, eval(xi));
        const double rel = std::abs(current - prev) / std::max(std::abs(current), 1e-300);
        stable = rel < 1e-4 ? stable + 1 : 0;
        prev = current;
        if (stable >= 3) break;
    }
    std::sort(pts.begin(), pts.end());
    double worst = -INFINITY;
    for (const auto& [xi, re] : pts) {
        g.grid.push_back(xi);
        g.max_re.push_back(re);
        if (re > worst) {
            worst = re;
            g.witness_xi = xi;
            g.witness_re = re;
        }
    }
    g.gap = -worst;
    g.certified = worst < -imag_tol;
    return g;
}

std::string spectra_csv(const std::vector<Spectrum>& scan) {
    std::string out = "xi";
    for (int j = 1; j <= 6; ++j) out += fmt::format(",re_{}", j);
    for (int j = 1; j <= 6; ++j) out += fmt::format(",im_{}", j);
    out += ",max_re\n";
    for (const Spectrum& s : scan) {
        out += fmt_double(s.xi);
        for (const cplx& z : s.eigenvalues) out += "," + fmt_double(z.real());
        for (const cplx& z : s.eigenvalues) out += "," + fmt_double(z.imag());
        out += "," + fmt_double(s.max_real_part) + "\n";
    }
    return out;
}

namespace {

nlohmann::json cplx_json(cplx z) { return nlohmann::json::array({z.real(), z.imag()}); }

nlohmann::json branches_json(const std::vector<BranchAsymptote>& bs) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& b : bs) out.push_back({{"label", b.label}, {"count", b.count}, {"coeff", b.coeff}, {"order", b.order}});
    return out;
}

}  // namespace

nlohmann::json to_json(const GapCertificate& g) {
    nlohmann::json j{{"nu", g.nu},       {"N", g.N},     {"gap", g.gap}, {"refinement_depth", g.refinement_depth},
                     {"certified", g.certified}, {"grid", g.grid}, {"max_re", g.max_re}};
    if (!g.certified) j["witness"] = {{"xi", g.witness_xi}, {"max_re", g.witness_re}};
    return j;
}

nlohmann::json to_json(const AsymptoticCoeffs& c) {
    nlohmann::json j{{"regime", c.regime == AsymRegime::both_damped ? "both_damped" : "gamma1_zero"},
                     {"low_freq", branches_json(c.low_freq)},
                     {"high_freq", branches_json(c.high_freq)},
                     {"sigma", {cplx_json(c.sigma[0]), cplx_json(c.sigma[1]), cplx_json(c.sigma[2])}}};
    if (c.regime == AsymRegime::both_damped) {
        j["A"] = c.A;
        j["B"] = c.B;
        j["C"] = c.C;
        j["D"] = c.D;
        j["beta"] = cplx_json(c.beta);
    } else {
        j["beta_hat"] = c.beta_hat;
        j["delta_hat"] = c.delta_hat;
    }
    j["kappa"] = c.kappa;
    j["delta"] = {cplx_json(c.delta[0]), cplx_json(c.delta[1])};
    return j;
}

nlohmann::json to_json(const CardanoClass& c) {
    nlohmann::json j{{"Q", c.Q}, {"R", c.R}, {"D", c.D}, {"verdict", to_string(c.verdict)}, {"has_thresholds", c.has_thresholds}};
    if (c.has_thresholds) j["thresholds"] = {c.gamma_hat_1, c.gamma_hat_2};
    return j;
}

nlohmann::json to_json(const Spectrum& s) {
    nlohmann::json ev = nlohmann::json::array();
    for (cplx z : s.eigenvalues) ev.push_back(cplx_json(z));
    return {{"xi", s.xi}, {"eigenvalues", ev}, {"multiplicity", s.multiplicity}, {"max_re", s.max_real_part}};
}

}  // namespace bresse
