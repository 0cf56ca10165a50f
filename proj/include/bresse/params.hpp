#pragma once

#include <cmath>

#include <stdexcept>
#include <string>

#include "json.hpp"

namespace bresse {

/// Violated precondition on caller input (bad parameter, empty interval, ...).
struct PreconditionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Parameters outside the regime where a result is claimed.
struct RegimeError : std::domain_error {
    using std::domain_error::domain_error;
};

/// A numerical procedure could not meet its accuracy contract.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Damping { general, gamma1_zero, gamma2_zero };

const char* to_string(Damping d);

/// Physical coefficients of the damped Bresse system.
struct SystemParams {
    double a = 1.0;
    double k = 1.0;
    double l = 1.0;
    double gamma1 = 0.0;
    double gamma2 = 0.0;

    /// Throws PreconditionError unless a,k,l > 0 and gamma1,gamma2 >= 0.
    void validate() const;

    /// (k²-1)l²-1, recomputed on every call.
    double stability_defect() const { return (k * k - 1.0) * l * l - 1.0; }
    /// stability_defect() zero up to rounding in its three terms.
    bool stability_degenerate() const { return std::abs(stability_defect()) <= 1e-12 * (k * k * l * l + l * l + 1.0); }

    /// Regime used to choose the closed-form characteristic polynomial.
    Damping damping() const;
};

bool operator==(const SystemParams& x, const SystemParams& y);

void to_json(nlohmann::json& j, const SystemParams& p);
/// Strict: exactly the five keys, each a number.
void from_json(const nlohmann::json& j, SystemParams& p);

}  // namespace bresse
