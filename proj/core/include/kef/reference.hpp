#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "kef/estimators.hpp"
#include "kef/levy.hpp"
#include "kef/random.hpp"

namespace kef {

using Params = std::map<std::string, double>;

/// The (ξ, η, q) for which a reference law is the law of V_{q,ξ,η}.
struct Setup {
    LevyTriplet xi;
    LevyTriplet eta;
    double q = 0.0;
};

struct ReferenceLaw {
    std::string name;
    Params params;  ///< resolved, defaults filled in
    std::string summary;
    ClosedForm law;
    Setup setup;
    std::function<double(Rng&)> sampler;  ///< empty when no exact sampler exists

    LawRep rep() const { return LawRep::closed(law); }
    bool has_density() const { return static_cast<bool>(law.density); }
    bool has_cf() const { return static_cast<bool>(law.cf); }
};

/// Registry lookup. Throws DomainError for an unknown name, an unknown
/// parameter or a parameter out of range.
ReferenceLaw reference(const std::string& name, const Params& params = {});

std::vector<std::string> reference_names();
/// Parameter names and defaults of a registry entry.
Params reference_defaults(const std::string& name);

/// Same characteristic exponent on a fixed grid, to relative tolerance.
bool same_process(const LevyTriplet& a, const LevyTriplet& b, double tol = 1e-9);
bool applicable(const ReferenceLaw& r, const LevyTriplet& xi, const LevyTriplet& eta, double q);

}  // namespace kef
