#pragma once

#include <array>
#include <string>
#include <vector>

#include "bresse/model.hpp"

namespace bresse {

struct Spectrum {
    double xi = 0.0;
    std::array<cplx, 6> eigenvalues{};
    std::array<int, 6> multiplicity{};  ///< size of the cluster each eigenvalue belongs to
    double max_real_part = 0.0;
};

/// Relative clustering tolerance used for multiplicity tags.
inline constexpr double kClusterTol = 1e-7;

/// Six eigenvalues of Phi(i xi), sorted by (Im, Re).
Spectrum eigenvalues(const SystemParams& p, double xi);

/// Cluster labels: eigenvalues within tol*(1+|lambda|) share a label (transitively).
std::array<int, 6> cluster_labels(const std::array<cplx, 6>& lam, double tol = kClusterTol);

/// Spectra over an ordered grid with eigenvalues permuted so that column j
/// follows one branch by nearest-neighbour continuation.
std::vector<Spectrum> spectrum_scan(const SystemParams& p, const std::vector<double>& grid, int threads = 1);

/// Reorders each spectrum in place to continue the branches of its predecessor.
void match_branches(std::vector<Spectrum>& scan);

/// One asymptotic branch: Re(lambda) ~ coeff * xi^order, shared by `count` eigenvalues.
struct BranchAsymptote {
    std::string label;
    int count = 1;
    double coeff = 0.0;
    double order = 0.0;
};

enum class AsymRegime { both_damped, gamma1_zero };

struct AsymptoticCoeffs {
    AsymRegime regime = AsymRegime::both_damped;
    std::vector<BranchAsymptote> low_freq;
    std::vector<BranchAsymptote> high_freq;
    double A = 0, B = 0, C = 0, D = 0;  ///< beta equation constants (both_damped)
    cplx beta{};                          ///< root of A + iB + beta (C + iD) = 0
    double beta_hat = 0, delta_hat = 0;  ///< gamma1_zero closed forms
    double kappa = 0;
    std::array<cplx, 2> delta{};          ///< (-gamma1 +- sqrt(gamma1² - 4)) / 4
    std::array<cplx, 3> sigma{};          ///< nonzero, non +-ikl eigenvalues of -L
};

AsymRegime asym_regime(const SystemParams& p);
AsymptoticCoeffs low_freq_expansion(const SystemParams& p);
AsymptoticCoeffs high_freq_expansion(const SystemParams& p);

/// The three eigenvalues of -L that are neither 0 nor +-ikl.
std::array<cplx, 3> sigma_roots(const SystemParams& p);

/// Residuals of sigma_roots in the two printed variants of the low-frequency
/// cubic, Z³ + (g1+g2)Z² + (l²+1+X)Z + (g1 l²+g2) with X = g1*g2 or g1+g2.
struct CubicVariantReport {
    double residual_product = 0;  ///< X = gamma1*gamma2
    double residual_sum = 0;      ///< X = gamma1+gamma2
    std::string matches;          ///< "product", "sum" or "both"
};
CubicVariantReport cubic_variant_report(const SystemParams& p);

enum class CardanoVerdict { one_real_pair_conjugate, three_distinct_real, real_plus_double };
const char* to_string(CardanoVerdict v);

struct CardanoClass {
    double Q = 0, R = 0, D = 0;
    bool has_thresholds = false;  ///< l² > 8
    double gamma_hat_1 = 0, gamma_hat_2 = 0;
    CardanoVerdict verdict = CardanoVerdict::one_real_pair_conjugate;
};

/// Classifies the cubic Z³ + g2 Z² + (l²+1) Z + g2 by the sign of D = Q³ + R².
CardanoClass cardano_classify(const SystemParams& p, double tol = 1e-12);

/// Closed form of D in terms of omega = gamma2².
double cardano_D_closed_form(double l, double gamma2);

struct GapCertificate {
    double nu = 0, N = 0;
    std::vector<double> grid;
    std::vector<double> max_re;
    double gap = 0;
    int refinement_depth = 0;
    bool certified = false;
    double witness_xi = 0;   ///< set when refused
    double witness_re = 0;
};

/// Adaptive scan of max Re(lambda) on [nu, N]. A spectrum with
/// max Re >= -imag_tol is treated as touching the imaginary axis and refuses
/// the certificate (certified = false, witness filled).
GapCertificate gap_scan(const SystemParams& p, double nu, double N, int initial_points = 64,
                        double imag_tol = 1e-10);

nlohmann::json to_json(const GapCertificate& g);
nlohmann::json to_json(const AsymptoticCoeffs& c);
nlohmann::json to_json(const CardanoClass& c);
nlohmann::json to_json(const Spectrum& s);

/// CSV text: xi, re_1..re_6, im_1..im_6, max_re.
std::string spectra_csv(const std::vector<Spectrum>& scan);

}  // namespace bresse
