#include "bresse/model.hpp"

#include <random>

#include <unsupported/Eigen/FFT>

namespace bresse {

SystemMatrices build_matrices(const SystemParams& p) {
    p.validate();
    const double a = p.a, k = p.k, l = p.l;
    SystemMatrices m;
    m.A.setZero();
    m.A(V, U_) = m.A(U_, V) = -1.0;
    m.A(Z, Y) = m.A(Y, Z) = -a;
    m.A(PHI, ETA) = m.A(ETA, PHI) = -k;

    m.L.setZero();
    m.L(V, Y) = 1.0;
    m.L(V, ETA) = l;
    m.L(U_, PHI) = -l * k;
    m.L(Y, V) = -1.0;
    m.L(Y, Y) = p.gamma1;
    m.L(PHI, U_) = l * k;
    m.L(ETA, V) = -l;
    m.L(ETA, ETA) = p.gamma2;
    return m;
}

SymbolMatrix build_symbol(const SystemParams& p, double xi) {
    auto m = build_matrices(p);
    SymbolMatrix s;
    s.xi = xi;
    s.A = m.A;
    s.L = m.L;
    s.Phi = -m.L.cast<cplx>() - cplx(0.0, xi) * m.A.cast<cplx>();
    return s;
}

cplx CharPoly::operator()(cplx lambda) const {
    cplx acc = coeffs[6];
    for (int d = 5; d >= 0; --d) acc = acc * lambda + coeffs[d];
    return acc;
}

CharPoly char_poly(const SystemParams& p, cplx zeta) {
    p.validate();
    CharPoly cp;
    cp.regime = p.damping();
    const cplx w = zeta * zeta;
    const double a2 = p.a * p.a, k2 = p.k * p.k, l2 = p.l * p.l;
    const double g1 = p.gamma1, g2 = p.gamma2;
    const cplx m = l2 - w;
    auto& c = cp.coeffs;
    switch (cp.regime) {
        case Damping::general: {
            auto full = char_poly_coeffs<cplx>(p, w);
            std::copy(full.begin(), full.end(), c.begin());
            break;
        }
        case Damping::gamma1_zero:
            c[6] = 1.0;
            c[5] = g2;
            c[4] = (k2 + 1.0) * m + 1.0 - a2 * w;
            c[3] = g2 * ((k2 * l2 + 1.0) - (1.0 + a2) * w);
            c[2] = m * (k2 * m + (k2 - a2 * (k2 + 1.0) * w));
            c[1] = g2 * (k2 * l2 - a2 * k2 * l2 * w + a2 * w * w);
            c[0] = -a2 * k2 * w * m * m;
            break;
        case Damping::gamma2_zero:
            c[6] = 1.0;
            c[5] = g1;
            c[4] = (k2 + 1.0) * m + 1.0 - a2 * w;
            c[3] = g1 * (k2 + 1.0) * m;
            c[2] = m * (k2 * m + (k2 - a2 * (k2 + 1.0) * w));
            c[1] = g1 * k2 * m * m;
            c[0] = -a2 * k2 * w * m * m;
            break;
    }
    return cp;
}

cplx det_lu(const CMat6& Phi, cplx lambda) {
    CMat6 M = lambda * CMat6::Identity() - Phi;
    return Eigen::PartialPivLU<CMat6>(M).determinant();
}

bool factor_check_gamma2_zero(const SystemParams& p, cplx zeta) {
    if (p.gamma2 != 0.0) throw PreconditionError("factor_check_gamma2_zero: requires gamma2 = 0");
    const CharPoly cp = char_poly(p, zeta);
    const cplx w = zeta * zeta;
    const double a2 = p.a * p.a, k2 = p.k * p.k, l2 = p.l * p.l, g1 = p.gamma1;
    std::mt19937_64 rng(0x5eed);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 12; ++trial) {
        const cplx lam(u(rng), u(rng));
        const cplx quad = lam * lam + k2 * (l2 - w);
        const cplx quart = std::pow(lam, 4) + g1 * std::pow(lam, 3) + (l2 + 1.0 - w * (a2 + 1.0)) * lam * lam +
                           g1 * (l2 - w) * lam - a2 * w * (l2 - w);
        const cplx lhs = quad * quart, rhs = cp(lam);
        if (std::abs(lhs - rhs) > 1e-10 * std::max(1.0, std::abs(rhs))) return false;
    }
    return true;
}

std::vector<double> periodic_derivative(const std::vector<double>& f, double dx, DerivativeMethod method) {
    const int n = static_cast<int>(f.size());
    std::vector<double> d(n);
    if (method == DerivativeMethod::finite_difference4) {
        auto at = [&](int i) { return f[((i % n) + n) % n]; };
        for (int i = 0; i < n; ++i)
            d[i] = (-at(i + 2) + 8.0 * at(i + 1) - 8.0 * at(i - 1) + at(i - 2)) / (12.0 * dx);
        return d;
    }
    Eigen::FFT<double> fft;
    std::vector<cplx> F;
    fft.fwd(F, f);
    const double L = n * dx;
    for (int m = 0; m < n; ++m) {
        int freq = m <= n / 2 ? m : m - n;
        if (n % 2 == 0 && m == n / 2) freq = 0;  // Nyquist mode has no odd derivative
        F[m] *= cplx(0.0, 2.0 * M_PI * freq / L);
    }
    std::vector<cplx> back;
    fft.inv(back, F);
    for (int i = 0; i < n; ++i) d[i] = back[i].real();
    return d;
}

InitialData transform_initial_data(const SystemParams& p, double dx, const std::vector<double>& phi0,
                                   const std::vector<double>& phi1, const std::vector<double>& psi0,
                                   const std::vector<double>& psi1, const std::vector<double>& w0,
                                   const std::vector<double>& w1, DerivativeMethod method) {
    p.validate();
    const std::size_t n = phi0.size();
    if (n < 8) throw PreconditionError("transform_initial_data: grid needs at least 8 points");
    for (const auto* v : {&phi1, &psi0, &psi1, &w0, &w1})
        if (v->size() != n) throw PreconditionError("transform_initial_data: sample arrays differ in length");
    if (!(dx > 0)) throw PreconditionError("transform_initial_data: dx must be > 0");

    const auto phix = periodic_derivative(phi0, dx, method);
    const auto psix = periodic_derivative(psi0, dx, method);
    const auto wx = periodic_derivative(w0, dx, method);
    InitialData out;
    out.dx = dx;
    out.derivative_method = method == DerivativeMethod::spectral ? "spectral" : "central4_periodic";
    for (auto& c : out.U) c.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.U[V][i] = phix[i] - psi0[i] - p.l * w0[i];
        out.U[U_][i] = phi1[i];
        out.U[Z][i] = p.a * psix[i];
        out.U[Y][i] = psi1[i];
        out.U[PHI][i] = p.k * (wx[i] - p.l * phi0[i]);
        out.U[ETA][i] = w1[i];
    }
    return out;
}

}  // namespace bresse
