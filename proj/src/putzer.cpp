#include "bresse/putzer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "bresse/spectral.hpp"

namespace bresse {

const char* to_string(RMethod m) {
    switch (m) {
        case RMethod::closed_form: return "closed_form";
        case RMethod::confluent: return "confluent";
        case RMethod::ode_chain: return "ode_chain";
    }
    return "?";
}

namespace {

constexpr long double kEpsLd = std::numeric_limits<long double>::epsilon();
constexpr double kExpLimit = 700.0;

lcplx to_l(cplx z) { return {static_cast<long double>(z.real()), static_cast<long double>(z.imag())}; }

/// exp(z t) with the overflow/underflow policy.
lcplx exp_policy(lcplx z, double t) {
    const long double re = z.real() * t;
    if (re < -kExpLimit) return 0;
    return std::exp(z * static_cast<long double>(t));
}

void check_exponents(const std::array<cplx, 6>& lam, double t) {
    if (!std::isfinite(t) || t < 0) throw PreconditionError("putzer_r: t must be finite and >= 0");
    for (const cplx& z : lam) {
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
            throw PreconditionError("putzer_r: eigenvalues must be finite");
        if (z.real() * t > kExpLimit)
            throw NumericalError(fmt::format("putzer_r: exp overflow, Re(lambda)*t = {} > {}", z.real() * t, kExpLimit));
    }
}

struct Cluster {
    lcplx c;                     // centre
    std::vector<lcplx> offsets;  // node - centre, one per node
};

/// Divided difference of exp(z t) over clustered nodes via residues. Each
/// cluster contributes the divided difference of exp(z t) / prod(other nodes),
/// evaluated from its Taylor series at the centre and the complete homogeneous
/// polynomials of the offsets. `mag` bounds the summed term magnitudes; `ok`
/// is cleared when a cluster is too wide for the series to converge.
lcplx divided_difference(const std::vector<Cluster>& cl, double t, long double& mag, bool& ok) {
    lcplx total = 0;
    mag = 0;
    ok = true;
    const long double tl = t;
    for (std::size_t i = 0; i < cl.size(); ++i) {
        const int m = static_cast<int>(cl[i].offsets.size());
        long double spread = 0, dmin = INFINITY;
        for (const lcplx& d : cl[i].offsets) spread = std::max(spread, std::abs(d));
        for (std::size_t k = 0; k < cl.size(); ++k)
            if (k != i)
                for (const lcplx& d : cl[k].offsets) dmin = std::min(dmin, std::abs(cl[k].c + d - cl[i].c));
        int extra = 0;
        if (spread > 0) {
            const long double q = spread * std::max(tl, 1 / dmin);
            if (q > 0.5L) {
                ok = false;
                return 0;
            }
            extra = std::min(60, static_cast<int>(std::ceil(std::log(1e-22L) / std::log(q))) + 1);
        }
        const int deg = m + extra;  // coefficients 0..deg-1
        std::vector<lcplx> ser(deg), g(deg), out(deg);
        std::vector<long double> serm(deg), outm(deg);
        const lcplx e = exp_policy(cl[i].c, t);
        long double tp = 1;
        for (int p = 0; p < deg; ++p) {
            if (p > 0) tp *= tl / p;
            ser[p] = e * tp;
            serm[p] = std::abs(ser[p]);
        }
        for (std::size_t k = 0; k < cl.size(); ++k) {
            if (k == i) continue;
            for (const lcplx& off : cl[k].offsets) {
                // 1 / (c_i - z_k + delta) as a series in delta.
                const lcplx d = cl[i].c - (cl[k].c + off);
                lcplx q = 1.0L / d;
                for (int p = 0; p < deg; ++p) {
                    g[p] = q;
                    q *= -1.0L / d;
                }
                std::fill(out.begin(), out.end(), lcplx(0));
                std::fill(outm.begin(), outm.end(), 0.0L);
                for (int p = 0; p < deg; ++p)
                    for (int s = 0; s + p < deg; ++s) {
                        out[p + s] += ser[p] * g[s];
                        outm[p + s] += serm[p] * std::abs(g[s]);
                    }
                ser.swap(out);
                serm.swap(outm);
            }
        }
        // h_j(offsets), j = 0..extra
        std::vector<lcplx> h(extra + 1, lcplx(0));
        h[0] = 1;
        for (const lcplx& d : cl[i].offsets)
            for (int j = 1; j <= extra; ++j) h[j] += d * h[j - 1];
        for (int j = 0; j <= extra; ++j) {
            total += ser[m - 1 + j] * h[j];
            mag += serm[m - 1 + j] * std::abs(h[j]);
        }
    }
    return total;
}

}  // namespace

std::array<lcplx, 6> putzer_r_ode(const std::array<cplx, 6>& lambdas, double t, double rtol) {
    check_exponents(lambdas, t);
    std::array<lcplx, 6> y{};
    y[0] = 1;
    if (t == 0) return y;
    // Integrate s = r exp(-c t) to keep magnitudes tame.
    long double c = -INFINITY;
    long double lam_max = 0;
    for (const cplx& z : lambdas) {
        c = std::max<long double>(c, z.real());
        lam_max = std::max<long double>(lam_max, std::abs(z));
    }
    std::array<lcplx, 6> lam;
    for (int j = 0; j < 6; ++j) lam[j] = to_l(lambdas[j]) - c;
    auto f = [&](const std::array<lcplx, 6>& s) {
        std::array<lcplx, 6> d;
        d[0] = lam[0] * s[0];
        for (int j = 1; j < 6; ++j) d[j] = lam[j] * s[j] + s[j - 1];
        return d;
    };
    // Dormand-Prince 5(4)
    static const long double a21 = 1.0L / 5, a31 = 3.0L / 40, a32 = 9.0L / 40, a41 = 44.0L / 45, a42 = -56.0L / 15,
                             a43 = 32.0L / 9, a51 = 19372.0L / 6561, a52 = -25360.0L / 2187, a53 = 64448.0L / 6561,
                             a54 = -212.0L / 729, a61 = 9017.0L / 3168, a62 = -355.0L / 33, a63 = 46732.0L / 5247,
                             a64 = 49.0L / 176, a65 = -5103.0L / 18656, b1 = 35.0L / 384, b3 = 500.0L / 1113,
                             b4 = 125.0L / 192, b5 = -2187.0L / 6784, b6 = 11.0L / 84, e1 = 71.0L / 57600,
                             e3 = -71.0L / 16695, e4 = 71.0L / 1920, e5 = -17253.0L / 339200, e6 = 22.0L / 525,
                             e7 = -1.0L / 40;
    long double tt = 0, h = std::min<long double>(t, 0.01L / (1 + lam_max));
    auto k1 = f(y);
    const long double atol = rtol * 1e-30L;
    long steps = 0;
    while (tt < t) {
        if (++steps > 50'000'000) throw NumericalError("putzer_r_ode: step budget exhausted");
        if (tt + h > t) h = t - tt;
        auto comb = [&](std::initializer_list<std::pair<long double, const std::array<lcplx, 6>*>> terms) {
            std::array<lcplx, 6> out = y;
            for (auto [w, k] : terms)
                for (int j = 0; j < 6; ++j) out[j] += h * w * (*k)[j];
            return out;
        };
        auto k2 = f(comb({{a21, &k1}}));
        auto k3 = f(comb({{a31, &k1}, {a32, &k2}}));
        auto k4 = f(comb({{a41, &k1}, {a42, &k2}, {a43, &k3}}));
        auto k5 = f(comb({{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
        auto k6 = f(comb({{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
        auto ynew = comb({{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
        auto k7 = f(ynew);
        long double err = 0;
        for (int j = 0; j < 6; ++j) {
            const lcplx e = h * (e1 * k1[j] + e3 * k3[j] + e4 * k4[j] + e5 * k5[j] + e6 * k6[j] + e7 * k7[j]);
            const long double sc = atol + rtol * std::max(std::abs(y[j]), std::abs(ynew[j]));
            err = std::max(err, std::abs(e) / sc);
        }
        if (err <= 1) {
            tt += h;
            y = ynew;
            k1 = k7;
        }
        const long double fac = err == 0 ? 5 : std::clamp(0.9L * std::pow(err, -0.2L), 0.2L, 5.0L);
        h *= fac;
    }
    const lcplx scale = std::exp(c * static_cast<long double>(t));
    for (auto& v : y) v *= scale;
    return y;
}

PutzerR putzer_r(const std::array<cplx, 6>& lambdas, double t, const std::array<long double, 6>* weights,
                 double abs_tol, double cluster_tol) {
    check_exponents(lambdas, t);
    PutzerR out;
    if (t == 0) {
        out.r[0] = 1;
        return out;
    }
    const auto label = cluster_labels(lambdas, cluster_tol);
    std::array<lcplx, 6> mu;
    bool merged = false;
    for (int i = 0; i < 6; ++i) {
        lcplx sum = 0;
        int n = 0;
        for (int j = 0; j < 6; ++j)
            if (label[j] == label[i]) {
                sum += to_l(lambdas[j]);
                ++n;
            }
        mu[i] = sum / static_cast<long double>(n);
        merged = merged || n > 1;
    }
    out.method = merged ? RMethod::confluent : RMethod::closed_form;

    long double err = 0, top = -INFINITY;
    bool converged = true;
    for (int j = 0; j < 6; ++j) {
        std::vector<Cluster> nodes;
        std::vector<int> labels;
        for (int i = 0; i <= j; ++i) {
            const auto it = std::find(labels.begin(), labels.end(), label[i]);
            const lcplx off = to_l(lambdas[i]) - mu[i];
            if (it == labels.end()) {
                labels.push_back(label[i]);
                nodes.push_back({mu[i], {off}});
            } else {
                nodes[it - labels.begin()].offsets.push_back(off);
            }
        }
        long double mag;
        bool ok;
        out.r[j] = divided_difference(nodes, t, mag, ok);
        converged = converged && ok;
        err += 16 * kEpsLd * mag * (weights ? (*weights)[j] : 1.0L);
        top = std::max(top, static_cast<long double>(lambdas[j].real()));
    }
    if (!converged) err = INFINITY;
    out.error_estimate = err;
    const long double scale = std::max<long double>(1, std::exp(top * static_cast<long double>(t)));
    if ((weights || !converged) && err > abs_tol * scale) {
        out.r = putzer_r_ode(lambdas, t);
        out.method = RMethod::ode_chain;
    }
    return out;
}

std::array<cplx, 6> putzer_order(std::array<cplx, 6> lambdas) {
    std::sort(lambdas.begin(), lambdas.end(), [](cplx x, cplx y) {
        return x.real() != y.real() ? x.real() > y.real() : x.imag() < y.imag();
    });
    return lambdas;
}

namespace {

SystemParams params_of(const SymbolMatrix& s) {
    SystemParams p;
    p.a = -s.A(Z, Y);
    p.k = -s.A(PHI, ETA);
    p.l = s.L(V, ETA);
    p.gamma1 = s.L(Y, Y);
    p.gamma2 = s.L(ETA, ETA);
    return p;
}

}  // namespace

PutzerPropagator::PutzerPropagator(const SymbolMatrix& s) {
    lambdas_ = putzer_order(eigenvalues(params_of(s), s.xi).eigenvalues);
    build(s);
}

PutzerPropagator::PutzerPropagator(const SymbolMatrix& s, const std::array<cplx, 6>& ordered) : lambdas_(ordered) {
    build(s);
}

void PutzerPropagator::build(const SymbolMatrix& s) {
    const LMat6 Phi = s.Phi.cast<lcplx>();
    phi_norm_ = s.Phi.norm();
    P_[0] = LMat6::Identity();
    for (int j = 1; j <= 6; ++j) {
        LMat6 shifted = Phi;
        shifted.diagonal().array() -= to_l(lambdas_[j - 1]);
        P_[j] = P_[j - 1] * shifted;
    }
    for (int j = 0; j < 6; ++j) weights_[j] = P_[j].norm();
}

double PutzerPropagator::cayley_hamilton_residual() const { return static_cast<double>(P_[6].norm()); }

CMat6 PutzerPropagator::exp(double t, RMethod* used) const {
    const PutzerR r = putzer_r(lambdas_, t, &weights_);
    if (used) *used = r.method;
    LMat6 E = LMat6::Zero();
    for (int j = 0; j < 6; ++j) E += r.r[j] * P_[j];
    return E.cast<cplx>();
}

CVec6 PutzerPropagator::apply(double t, const CVec6& u0) const {
    const PutzerR r = putzer_r(lambdas_, t, &weights_);
    const Eigen::Matrix<lcplx, 6, 1> u = u0.cast<lcplx>();
    Eigen::Matrix<lcplx, 6, 1> acc = Eigen::Matrix<lcplx, 6, 1>::Zero();
    for (int j = 0; j < 6; ++j) acc += r.r[j] * (P_[j] * u);
    return acc.cast<cplx>();
}

MatrixExp matrix_exp(const SymbolMatrix& s, double t) {
    if (!(t >= 0)) throw PreconditionError("matrix_exp: t must be >= 0");
    PutzerPropagator prop(s);
    MatrixExp out;
    out.order = prop.lambdas();
    if (t == 0) {
        out.E = CMat6::Identity();
        return out;
    }
    out.E = prop.exp(t, &out.method);
    return out;
}

}  // namespace bresse
