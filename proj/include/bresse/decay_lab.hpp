#pragma once

#include <string>
#include <vector>

#include "bresse/lyapunov.hpp"
#include "bresse/spectral.hpp"

namespace bresse {

enum class ProfileKind { gaussian, box, high_freq_packet, conservative_mode };

struct Profile {
    ProfileKind kind = ProfileKind::gaussian;
    double width = 1.0;      ///< gaussian width, box smoothing width, packet width, mode window
    double halfwidth = 1.0;  ///< box only
    double center = 10.0;    ///< packet only
};

struct Experiment {
    SystemParams params;
    Profile profile;
    GridSpec grid;
    std::vector<double> times;
    std::vector<int> j_orders{0};
    double fit_t0 = 0, fit_t1 = 0;  ///< 0,0 selects the last decade of times
};

/// Log-spaced times in [t0, t1].
std::vector<double> log_times(double t0, double t1, int n);

/// Initial Fourier data for a profile; vector direction (1,..,1)/sqrt(6)
/// except for the conservative mode, which follows the eigenvector of the
/// purely imaginary eigenvalue with Im > 0 at xi > 0 (conjugated at -xi).
FourierState initial_state(const SystemParams& p, const Profile& prof, const std::vector<double>& grid);

/// Unit eigenvector of Phi(i xi) for the eigenvalue nearest `lambda` by inverse iteration.
CVec6 inverse_iteration(const SystemParams& p, double xi, cplx lambda, int iterations = 4);

struct DecayFit {
    int j = 0;
    double exponent = 0;
    double amplitude = 0;
    double fit_t0 = 0, fit_t1 = 0;
    double max_residual = 0;  ///< in log space
    bool monotone = true;
    std::vector<double> times;
    std::vector<double> norms;  ///< ||d^j U(t)||_{L2}
};

nlohmann::json to_json(const DecayFit& f);

/// Least-squares slope of log(norm) against log(1+t) on [t0, t1].
DecayFit fit_power_law(const std::vector<double>& times, const std::vector<double>& norms, double t0, double t1);

std::vector<DecayFit> run_decay(const Experiment& e, int threads = 1);

struct PointwiseRate {
    std::vector<double> xi, rate, shape;
    std::string shape_name;  ///< "rho1" or "rho2"
    double ratio_min = 0, ratio_max = 0;  ///< of rate / shape
};

/// Worst-case rate per frequency: -log(||e^{Phi T}||_2^2)/T with
/// T = t_mult / (-2 max Re lambda(xi)).
PointwiseRate fit_pointwise_rate(const SystemParams& p, const std::vector<double>& xi_grid, double t_mult = 40.0);

/// -log(|U(xi,T)|^2/|U0|^2)/T for a specific initial vector.
double vector_rate(const SystemParams& p, double xi, const CVec6& U0, double T);

/// Largest multiplicity tag over the middle frequencies [nu, N].
int middle_multiplicity(const SystemParams& p, double nu, double N, int points = 400);

struct FrequencyPartition {
    double nu = 0.05, N = 50.0;
};

struct RegionFit {
    double c1 = 0, c2 = 0;          ///< low: ||e^{Phi t}||^2 <= c1 exp(-c2 xi^2 t)
    double c3 = 0, c4 = 0;          ///< high: ||e^{Phi t}||^2 <= c3 |xi|^(2 p) exp(-c4 xi^-2 t)
    double c5 = 0, C = 0;           ///< middle: ||e^{Phi t}||^2 <= c5 (1 + |xi|^(2m) t^m) exp(-C t)
    int m = 0;
    double power_true = 0;          ///< fitted |xi|-power of sup_t ||e^{Phi t}|| e^{c4 xi^-2 t / 2}
    double power_majorant = 0;      ///< same for the Putzer majorant sum |r_{j+1}| ||P_j||
    double expected_power = 0;      ///< 2 (a = k = 1) or 6 (a != 1)
    int expected_loss = 0;          ///< 1 or 3
};

struct SynthesisReport {
    RegionFit fit;
    std::vector<double> times;
    std::vector<double> low, mid, high, total, bound;  ///< squared norms per time
    bool dominated = true;
    double witness_t = 0, witness_xi = 0;
    DecayFit low_fit;  ///< power law of sqrt(low) alone
    GapCertificate gap;
};

nlohmann::json to_json(const SynthesisReport& r);

SynthesisReport three_region_synthesis(const Experiment& e, const FrequencyPartition& part, int ell, int threads = 1);

struct OptimalityReport {
    std::vector<double> xi_low, ratio_low;  ///< fitted c rho(xi) / (-2 Re lambda_1)
    double fitted_c = 0;
    double ratio_min = 0, ratio_max = 0;
    double high_rate_min = 0;      ///< min of -2 max Re lambda on [1e2, 1e3]
    double high_rate_exponent = 0; ///< log-log slope of -max Re lambda on [1e2, 1e3]
    double lyapunov_c3 = 0;
};

nlohmann::json to_json(const OptimalityReport& r);

OptimalityReport optimality_probe(const SystemParams& p);

struct PacketDecay {
    double xi0 = 0;
    double t_e1 = 0, t_e2 = 0;  ///< first times the norm ratio falls below e^-1, e^-2
    double decay_time = 0;      ///< t_e2 - t_e1
};

/// Norm decay of a packet centred at +-xi0 with width xi0/50.
PacketDecay packet_decay_time(const SystemParams& p, double xi0, int threads = 1);

/// Strict JSON parsing of an experiment block (snake_case keys only).
Experiment experiment_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Experiment& e);

}  // namespace bresse
