#include "bresse/params.hpp"

#include <cmath>

namespace bresse {

const char* to_string(Damping d) {
    switch (d) {
        case Damping::general: return "general";
        case Damping::gamma1_zero: return "gamma1_zero";
        case Damping::gamma2_zero: return "gamma2_zero";
    }
    return "?";
}

void SystemParams::validate() const {
    auto finite = [](double x) { return std::isfinite(x); };
    if (!finite(a) || !finite(k) || !finite(l) || !finite(gamma1) || !finite(gamma2))
        throw PreconditionError("params: all coefficients must be finite");
    if (a <= 0) throw PreconditionError("params: a must be > 0");
    if (k <= 0) throw PreconditionError("params: k must be > 0");
    if (l <= 0) throw PreconditionError("params: l must be > 0");
    if (gamma1 < 0) throw PreconditionError("params: gamma1 must be >= 0");
    if (gamma2 < 0) throw PreconditionError("params: gamma2 must be >= 0");
}

Damping SystemParams::damping() const {
    if (gamma2 == 0.0) return Damping::gamma2_zero;
    if (gamma1 == 0.0) return Damping::gamma1_zero;
    return Damping::general;
}

bool operator==(const SystemParams& x, const SystemParams& y) {
    return x.a == y.a && x.k == y.k && x.l == y.l && x.gamma1 == y.gamma1 && x.gamma2 == y.gamma2;
}

void to_json(nlohmann::json& j, const SystemParams& p) {
    j = nlohmann::json{{"a", p.a}, {"k", p.k}, {"l", p.l}, {"gamma1", p.gamma1}, {"gamma2", p.gamma2}};
}

void from_json(const nlohmann::json& j, SystemParams& p) {
    if (!j.is_object()) throw PreconditionError("params: expected a JSON object");
    static const char* keys[] = {"a", "k", "l", "gamma1", "gamma2"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* key : keys) known = known || it.key() == key;
        if (!known) throw PreconditionError("params: unknown key '" + it.key() + "'");
    }
    double* slots[] = {&p.a, &p.k, &p.l, &p.gamma1, &p.gamma2};
    for (int i = 0; i < 5; ++i) {
        if (!j.contains(keys[i])) throw PreconditionError(std::string("params: missing key '") + keys[i] + "'");
        const auto& v = j.at(keys[i]);
        if (!v.is_number()) throw PreconditionError(std::string("params: '") + keys[i] + "' must be a number");
        *slots[i] = v.get<double>();
    }
    p.validate();
}

}  // namespace bresse
