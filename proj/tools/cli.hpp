#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kef/disteq.hpp"
#include "kef/levy.hpp"
#include "kef/path_sim.hpp"
#include "kef/reference.hpp"

namespace kef::cli {

enum Exit : int { Ok = 0, Config = 2, Numeric = 3, Fail = 4 };

struct RunConfig {
    std::optional<LevyTriplet> xi;
    std::optional<LevyTriplet> eta;
    std::optional<double> q;
    SimConfig sim;
    bool horizon_given = false;
    Sampler sampler = Sampler::Direct;
    std::size_t n = 1000;

    std::optional<std::string> reference;
    Params reference_params;
    std::optional<std::string> samples;
    bool track_atom = false;

    std::string equation;
    std::string grid;
    std::optional<double> tol;
    CheckOptions check;

    std::string out;
    std::string plot;
};

/// {"sigma2": num, "gamma": num | {"drift0": num}, "nu": [{"kind": ..., params}]}
LevyTriplet parse_process(const nlohmann::json& j);
/// Fields of a config file; unknown keys are rejected.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

/// "a:b:n", "log" or "log:lo:hi:per_decade". Points stay away from 0.
std::vector<double> parse_grid(const std::string& spec, bool positive);

/// Entry point behind the kef binary; returns the exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace kef::cli
