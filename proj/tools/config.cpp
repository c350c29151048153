#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "cli.hpp"
#include "kef/errors.hpp"

namespace kef::cli {

namespace {

using json = nlohmann::json;

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items())
        if (!ok.count(k)) throw ConfigError("unknown field " + where + "." + k);
}

double number(const json& j, const std::string& where, const char* key) {
    if (!j.contains(key)) throw ConfigError("missing field " + where + "." + key);
    if (!j[key].is_number()) throw ConfigError(where + "." + key + " must be a number");
    return j[key].get<double>();
}

double number_or(const json& j, const std::string& where, const char* key, double fallback) {
    return j.contains(key) ? number(j, where, key) : fallback;
}

LevyMeasure parse_jump(const json& j, const std::string& where) {
    if (!j.contains("kind") || !j["kind"].is_string()) throw ConfigError("missing field " + where + ".kind");
    const std::string kind = j["kind"];
    if (kind == "atom") {
        only_keys(j, where, {"kind", "position", "mass"});
        return LevyMeasure::atom(number(j, where, "position"), number(j, where, "mass"));
    }
    if (kind == "two_sided_exp") {
        only_keys(j, where, {"kind", "rate", "left", "right"});
        return LevyMeasure::two_sided_exp(number(j, where, "rate"), number(j, where, "left"),
                                          number(j, where, "right"));
    }
    if (kind == "cp_exp") {
        only_keys(j, where, {"kind", "intensity", "jump_rate"});
        return LevyMeasure::cp_exp(number(j, where, "intensity"), number(j, where, "jump_rate"));
    }
    if (kind == "ml_subordinator") {
        only_keys(j, where, {"kind", "alpha"});
        return LevyMeasure::ml_subordinator(number(j, where, "alpha"));
    }
    throw ConfigError(where + ".kind: unknown jump kind '" + kind + "'");
}

Horizon parse_horizon(const json& j) {
    if (j.is_string()) {
        if (j == "killed") return Horizon::killed();
        throw ConfigError("sim.horizon must be \"killed\" or {\"T\": num}");
    }
    only_keys(j, "sim.horizon", {"kind", "T"});
    if (j.contains("kind") && j["kind"] == "killed") return Horizon::killed();
    return Horizon::fixed(number(j, "sim.horizon", "T"));
}

SmallJumpMode parse_small_jumps(const std::string& s) {
    if (s == "drop_compensate") return SmallJumpMode::DropCompensate;
    if (s == "gaussian_approx") return SmallJumpMode::GaussianApprox;
    throw ConfigError("sim.small_jumps must be drop_compensate or gaussian_approx");
}

Sampler parse_sampler(const std::string& s) {
    if (s == "direct") return Sampler::Direct;
    if (s == "sde") return Sampler::Sde;
    throw ConfigError("sampler must be direct or sde");
}

CheckOptions::KMode parse_k_mode(const std::string& s) {
    if (s == "auto") return CheckOptions::KMode::Auto;
    if (s == "estimate") return CheckOptions::KMode::Estimate;
    if (s == "explicit") return CheckOptions::KMode::Explicit;
    throw ConfigError("check.k_mode must be auto, estimate or explicit");
}

}  // namespace

LevyTriplet parse_process(const json& j) {
    only_keys(j, "process", {"sigma2", "gamma", "nu"});
    const double sigma2 = number_or(j, "process", "sigma2", 0.0);
    if (sigma2 < 0.0) throw ConfigError("process.sigma2 must be nonnegative");
    LevyMeasure nu;
    if (j.contains("nu")) {
        if (!j["nu"].is_array()) throw ConfigError("process.nu must be an array");
        std::vector<LevyMeasure> parts;
        for (std::size_t i = 0; i < j["nu"].size(); ++i)
            parts.push_back(parse_jump(j["nu"][i], "process.nu[" + std::to_string(i) + "]"));
        if (!parts.empty()) nu = LevyMeasure::sum(std::move(parts));
    }
    if (!j.contains("gamma")) return LevyTriplet::from_location(sigma2, nu, 0.0);
    const json& g = j["gamma"];
    if (g.is_number()) return LevyTriplet::from_location(sigma2, nu, g.get<double>());
    only_keys(g, "process.gamma", {"drift0"});
    return LevyTriplet::from_drift(sigma2, nu, number(g, "process.gamma", "drift0"));
}

RunConfig parse_config(const json& j) {
    only_keys(j, "config",
              {"xi", "eta", "q", "sim", "sampler", "n", "reference", "samples", "track_atom", "check", "out", "plot"});
    RunConfig c;
    try {
        if (j.contains("xi")) c.xi = parse_process(j["xi"]);
        if (j.contains("eta")) c.eta = parse_process(j["eta"]);
    } catch (const DomainError& e) {
        throw ConfigError(std::string("invalid process: ") + e.what());
    }
    if (j.contains("q")) c.q = number(j, "config", "q");
    if (j.contains("sim")) {
        const json& s = j["sim"];
        only_keys(s, "sim", {"h", "eps", "horizon", "small_jumps", "seed", "assume_convergence"});
        c.sim.h = number_or(s, "sim", "h", c.sim.h);
        c.sim.eps = number_or(s, "sim", "eps", c.sim.eps);
        if (s.contains("horizon")) {
            c.sim.horizon = parse_horizon(s["horizon"]);
            c.horizon_given = true;
        }
        if (s.contains("small_jumps")) c.sim.small_jumps = parse_small_jumps(s["small_jumps"].get<std::string>());
        if (s.contains("seed")) c.sim.master_seed = s["seed"].get<std::uint64_t>();
        if (s.contains("assume_convergence")) c.sim.assume_convergence = s["assume_convergence"].get<bool>();
    }
    if (j.contains("sampler")) c.sampler = parse_sampler(j["sampler"].get<std::string>());
    if (j.contains("n")) c.n = j["n"].get<std::size_t>();
    if (j.contains("reference")) {
        const json& r = j["reference"];
        if (r.is_string()) {
            c.reference = r.get<std::string>();
        } else {
            only_keys(r, "reference", {"name", "params"});
            if (!r.contains("name")) throw ConfigError("missing field reference.name");
            c.reference = r["name"].get<std::string>();
            if (r.contains("params"))
                for (const auto& [k, v] : r["params"].items()) c.reference_params[k] = v.get<double>();
        }
    }
    if (j.contains("samples")) c.samples = j["samples"].get<std::string>();
    if (j.contains("track_atom")) c.track_atom = j["track_atom"].get<bool>();
    if (j.contains("check")) {
        const json& k = j["check"];
        only_keys(k, "check",
                  {"equation", "grid", "tol", "k_mode", "assume_second_moment", "mc_sigmas", "bandwidth"});
        if (k.contains("equation")) c.equation = k["equation"].get<std::string>();
        if (k.contains("grid")) c.grid = k["grid"].get<std::string>();
        if (k.contains("tol")) c.tol = number(k, "check", "tol");
        if (k.contains("k_mode")) c.check.k_mode = parse_k_mode(k["k_mode"].get<std::string>());
        if (k.contains("assume_second_moment")) c.check.assume_second_moment = k["assume_second_moment"].get<bool>();
        c.check.mc_sigmas = number_or(k, "check", "mc_sigmas", c.check.mc_sigmas);
        c.check.bandwidth = number_or(k, "check", "bandwidth", c.check.bandwidth);
    }
    if (j.contains("out")) c.out = j["out"].get<std::string>();
    if (j.contains("plot")) c.plot = j["plot"].get<std::string>();
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config " + path);
    json j;
    try {
        j = json::parse(is);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path + " is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

std::vector<double> parse_grid(const std::string& spec, bool positive) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    const auto num = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::logic_error&) {
            throw ConfigError("grid: cannot read '" + s + "' in \"" + spec + "\"");
        }
    };
    const std::array<double, 1> zero{0.0};
    if (!parts.empty() && parts[0] == "log") {
        if (parts.size() != 1 && parts.size() != 4) throw ConfigError("grid must be log or log:lo:hi:per_decade");
        const double lo = parts.size() == 4 ? num(parts[1]) : -2.0;
        const double hi = parts.size() == 4 ? num(parts[2]) : 1.0;
        const double per = parts.size() == 4 ? num(parts[3]) : 4.0;
        if (!(hi > lo) || per < 1.0) throw ConfigError("grid: need lo < hi and per_decade >= 1");
        return log_symmetric_grid(lo, hi, static_cast<int>(per), !positive);
    }
    if (parts.size() != 3) throw ConfigError("grid must be a:b:n or log");
    const double a = num(parts[0]), b = num(parts[1]), n = num(parts[2]);
    if (!(b > a) || n < 2.0 || n != std::floor(n)) throw ConfigError("grid: need a < b and an integer n >= 2");
    return linear_grid(a, b, static_cast<int>(n), zero, 1e-3 * (b - a));
}

}  // namespace kef::cli
