#include "bresse/polyroots.hpp"

#include <Eigen/Eigenvalues>

#include "bresse/model.hpp"

namespace bresse {

namespace {

using qreal = __float128;

struct qcplx {
    qreal re = 0, im = 0;
    qcplx() = default;
    qcplx(qreal r, qreal i = 0) : re(r), im(i) {}
};
qcplx operator+(qcplx x, qcplx y) { return {x.re + y.re, x.im + y.im}; }
qcplx operator-(qcplx x, qcplx y) { return {x.re - y.re, x.im - y.im}; }
qcplx operator*(qcplx x, qcplx y) { return {x.re * y.re - x.im * y.im, x.re * y.im + x.im * y.re}; }
qcplx operator/(qcplx x, qcplx y) {
    // Smith's algorithm
    if ((y.re < 0 ? -y.re : y.re) >= (y.im < 0 ? -y.im : y.im)) {
        const qreal r = y.im / y.re, d = y.re + y.im * r;
        return {(x.re + x.im * r) / d, (x.im - x.re * r) / d};
    }
    const qreal r = y.re / y.im, d = y.re * r + y.im;
    return {(x.re * r + x.im) / d, (x.im * r - x.re) / d};
}
qcplx& operator+=(qcplx& x, qcplx y) { return x = x + y; }
qcplx& operator-=(qcplx& x, qcplx y) { return x = x - y; }
bool is_zero(qcplx x) { return x.re == 0 && x.im == 0; }
// Max-norm is enough for step-size tests.
qreal mag(qcplx x) {
    const qreal a = x.re < 0 ? -x.re : x.re, b = x.im < 0 ? -x.im : x.im;
    return a > b ? a : b;
}

}  // namespace

std::array<cplx, 6> companion_roots(const std::array<cplx, 7>& c) {
    Eigen::Matrix<cplx, 6, 6> C = Eigen::Matrix<cplx, 6, 6>::Zero();
    for (int i = 1; i < 6; ++i) C(i, i - 1) = 1.0;
    for (int i = 0; i < 6; ++i) C(i, 5) = -c[i] / c[6];
    Eigen::ComplexEigenSolver<Eigen::Matrix<cplx, 6, 6>> es(C, false);
    if (es.info() != Eigen::Success) throw NumericalError("companion_roots: eigen-solver did not converge");
    std::array<cplx, 6> r;
    for (int i = 0; i < 6; ++i) r[i] = es.eigenvalues()[i];
    return r;
}

PolishResult symbol_roots(const SystemParams& p, double xi) {
    const double w = -xi * xi;
    std::array<cplx, 7> cd;
    {
        auto c = char_poly_coeffs<double>(p, w);
        for (int i = 0; i < 7; ++i) cd[i] = c[i];
    }
    PolishResult out;
    out.roots = companion_roots(cd);

    const auto cq = char_poly_coeffs<qreal>(p, qreal(w));
    std::array<qcplx, 6> z;
    for (int i = 0; i < 6; ++i) z[i] = qcplx(qreal(out.roots[i].real()), qreal(out.roots[i].imag()));

    // Exactly coincident starts stall Aberth; nudge them apart.
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < i; ++j)
            if (z[i].re == z[j].re && z[i].im == z[j].im) z[i] += qcplx(qreal(1e-9) * (1 + mag(z[i])), qreal(1e-9) * (i + 1));

    const qreal tol = qreal(1e-30);
    for (int sweep = 1; sweep <= 80; ++sweep) {
        qreal worst = 0;
        for (int i = 0; i < 6; ++i) {
            qcplx pv = cq[6], dp;
            for (int d = 5; d >= 0; --d) {
                dp = dp * z[i] + pv;
                pv = pv * z[i] + cq[d];
            }
            if (is_zero(pv)) continue;
            const qcplx ratio = pv / dp;
            qcplx sum;
            for (int j = 0; j < 6; ++j)
                if (j != i) sum += qcplx(1) / (z[i] - z[j]);
            const qcplx step = ratio / (qcplx(1) - ratio * sum);
            z[i] -= step;
            const qreal rel = mag(step) / (1 + mag(z[i]));
            if (rel > worst) worst = rel;
        }
        out.sweeps = sweep;
        if (worst < tol) {
            out.converged = true;
            break;
        }
    }
    for (int i = 0; i < 6; ++i) out.roots[i] = cplx(static_cast<double>(z[i].re), static_cast<double>(z[i].im));
    return out;
}

}  // namespace bresse
