#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>

#include <CLI11.hpp>

#include "kef/errors.hpp"
#include "kef/estimators.hpp"

namespace kef::cli {

namespace {

using json = nlohmann::json;

const std::vector<std::string> kEquations{"cf",     "laplace", "density-laplace", "mu",
                                          "mu-fm",  "mu-fv",   "density-diff",    "generator"};

struct Flags {
    std::string config;
    std::optional<double> q;
    std::optional<std::size_t> n;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string reference;
    std::string params;
    std::string equation;
    std::string grid;
    std::optional<double> tol;
    std::string samples;
    std::string sampler;
    std::optional<double> T;
    std::optional<double> h;
    std::optional<double> eps;
    std::string k_mode;
    std::string plot;
    bool assume_convergence = false;
    bool assume_second_moment = false;
    bool track_atom = false;
    bool list = false;
};

void add_common(CLI::App* c, Flags& f) {
    c->add_option("--config", f.config, "run configuration JSON");
    c->add_option("--q", f.q, "killing rate");
    c->add_option("--n", f.n, "number of draws");
    c->add_option("--seed", f.seed, "master seed");
    c->add_option("--out", f.out, "output path");
    c->add_option("--reference", f.reference, "registry law");
    c->add_option("--params", f.params, "registry parameters as a JSON object");
    c->add_option("--samples", f.samples, "CSV of draws used as the law");
    c->add_option("--sampler", f.sampler, "direct or sde");
    c->add_option("--T", f.T, "fixed horizon for q = 0");
    c->add_option("--step", f.h, "time step h");
    c->add_option("--eps", f.eps, "small-jump cutoff");
    c->add_flag("--assume-convergence", f.assume_convergence, "skip the q = 0 convergence check");
}

RunConfig merge(const Flags& f) {
    RunConfig c = f.config.empty() ? RunConfig{} : load_config(f.config);
    if (f.q) c.q = *f.q;
    if (f.n) c.n = *f.n;
    if (f.seed) c.sim.master_seed = *f.seed;
    if (!f.out.empty()) c.out = f.out;
    if (!f.reference.empty()) {
        if (c.reference != f.reference) c.reference_params.clear();
        c.reference = f.reference;
    }
    if (!f.params.empty()) {
        json p;
        try {
            p = json::parse(f.params);
        } catch (const json::parse_error& e) {
            throw ConfigError(std::string("--params is not valid JSON: ") + e.what());
        }
        if (!p.is_object()) throw ConfigError("--params must be a JSON object");
        for (const auto& [k, v] : p.items()) {
            if (!v.is_number()) throw ConfigError("--params." + k + " must be a number");
            c.reference_params[k] = v.get<double>();
        }
    }
    if (!f.samples.empty()) c.samples = f.samples;
    if (!f.sampler.empty()) {
        if (f.sampler == "direct") c.sampler = Sampler::Direct;
        else if (f.sampler == "sde") c.sampler = Sampler::Sde;
        else throw ConfigError("--sampler must be direct or sde");
    }
    if (f.T) {
        c.sim.horizon = Horizon::fixed(*f.T);
        c.horizon_given = true;
    }
    if (f.h) c.sim.h = *f.h;
    if (f.eps) c.sim.eps = *f.eps;
    if (f.assume_convergence) c.sim.assume_convergence = true;
    if (!f.equation.empty()) c.equation = f.equation;
    if (!f.grid.empty()) c.grid = f.grid;
    if (f.tol) c.tol = *f.tol;
    if (!f.k_mode.empty()) {
        if (f.k_mode == "auto") c.check.k_mode = CheckOptions::KMode::Auto;
        else if (f.k_mode == "estimate") c.check.k_mode = CheckOptions::KMode::Estimate;
        else if (f.k_mode == "explicit") c.check.k_mode = CheckOptions::KMode::Explicit;
        else throw ConfigError("--k-mode must be auto, estimate or explicit");
    }
    if (f.assume_second_moment) c.check.assume_second_moment = true;
    if (f.track_atom) c.track_atom = true;
    if (!f.plot.empty()) c.plot = f.plot;
    return c;
}

std::optional<ReferenceLaw> lookup(const RunConfig& c) {
    if (!c.reference) return std::nullopt;
    Params p = c.reference_params;
    const Params defaults = reference_defaults(*c.reference);
    if (c.q && defaults.count("q") && !p.count("q")) p["q"] = *c.q;
    return reference(*c.reference, p);
}

Setup resolve(const RunConfig& c, const std::optional<ReferenceLaw>& ref) {
    Setup s;
    if (c.xi && c.eta) {
        s.xi = *c.xi;
        s.eta = *c.eta;
    } else if (c.xi || c.eta) {
        throw ConfigError(std::string("missing field ") + (c.xi ? "eta" : "xi"));
    } else if (ref) {
        s.xi = ref->setup.xi;
        s.eta = ref->setup.eta;
    } else {
        throw ConfigError("missing fields xi and eta (or give --reference)");
    }
    if (c.q) s.q = *c.q;
    else if (ref) s.q = ref->setup.q;
    else throw ConfigError("missing field q");
    if (s.q < 0.0) throw ConfigError("q must be nonnegative");
    return s;
}

SimConfig sim_for(const RunConfig& c, double q) {
    SimConfig s = c.sim;
    if (q == 0.0 && (!c.horizon_given || s.horizon.kind != Horizon::Kind::Fixed))
        throw ConfigError("missing field sim.horizon.T (q = 0 needs a fixed horizon; or pass --T)");
    if (q > 0.0 && !c.horizon_given) s.horizon = Horizon::killed();
    return s;
}

SampleBatch simulate(const RunConfig& c, const Setup& s) {
    const SimConfig sim = sim_for(c, s.q);
    const auto xi = ProcessSpec::make(s.xi, Role::Xi);
    const auto eta = ProcessSpec::make(s.eta, Role::Eta);
    return batch(c.n, c.sampler, xi, eta, s.q, sim);
}

const char* horizon_name(const Horizon& h) { return h.kind == Horizon::Kind::Killed ? "killed" : "fixed"; }

json batch_json(const SampleBatch& b, const RunConfig& c, const Setup& s, double seconds) {
    json j;
    j["command"] = "simulate";
    j["n"] = b.n;
    j["seed"] = b.seed;
    j["sampler"] = to_string(b.sampler);
    j["q"] = s.q;
    j["xi"] = s.xi.describe();
    j["eta"] = s.eta.describe();
    const SimConfig sim = sim_for(c, s.q);
    j["sim"] = {{"h", sim.h},
                {"eps", sim.eps},
                {"horizon", horizon_name(sim.horizon)},
                {"T", sim.horizon.kind == Horizon::Kind::Fixed ? json(sim.horizon.T) : json(nullptr)},
                {"small_jumps", sim.small_jumps == SmallJumpMode::DropCompensate ? "drop_compensate"
                                                                                 : "gaussian_approx"}};
    j["bias"] = {{"eps_xi", b.bias.eps_xi},
                 {"eps_eta", b.bias.eps_eta},
                 {"step", b.bias.step},
                 {"horizon", b.bias.horizon},
                 {"convergence_assumed", b.bias.convergence_assumed}};
    const double mean = std::accumulate(b.values.begin(), b.values.end(), 0.0) / static_cast<double>(b.n);
    j["mean"] = mean;
    j["seconds"] = seconds;
    return j;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot open " + path + " for writing");
    os << text << '\n';
}

LawRep law_for_check(const RunConfig& c, const std::optional<ReferenceLaw>& ref) {
    // With both, the draws are the law and the reference only supplies (xi, eta, q).
    if (c.samples) return LawRep::empirical(read_csv(*c.samples), c.track_atom);
    if (ref) return ref->rep();
    throw ConfigError("missing law: give --reference or --samples");
}

bool positive_support(const LawRep& law) {
    if (law.is_closed()) return law.closed_form().support.lo >= 0.0;
    const auto& v = law.sample().values;
    return !v.empty() && v.front() >= 0.0;
}

std::string default_grid(const std::string& equation, bool positive) {
    if (equation == "cf") return "0.1:10:25";
    if (equation == "laplace") return "0.1:5:20";
    if (equation == "density-laplace") return "0.05:5:20";
    if (equation == "generator") return positive ? "0.05:2:6" : "-2:2:6";
    return positive ? "0.05:5:21" : "-5:5:21";
}

ResidualReport generator_report(std::span<const double> edges, const Setup& s, const LawRep& law,
                                const CheckOptions& opt) {
    ResidualReport r;
    r.equation = "generator";
    r.tolerance = opt.tol;
    r.pass = true;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        const PolyBump f{edges[i], edges[i + 1], 1.0};
        const Pairing p = generator_pairing(f, s.xi, s.eta, s.q, law, opt);
        r.grid.push_back(0.5 * (f.a + f.b));
        r.residuals.push_back(std::abs(p.value));
        r.budget = std::max(r.budget, p.budget);
        r.norm_sup = std::max(r.norm_sup, std::abs(p.value));
        r.norm_l1 += std::abs(p.value) * (f.b - f.a);
        if (std::abs(p.value) > opt.tol + p.budget) r.pass = false;
    }
    r.notes.push_back("bumps (1 - t^2)^4 on consecutive grid cells; grid holds their centres");
    return r;
}

ResidualReport dispatch(const std::string& eq, std::span<const double> g, const Setup& s, const LawRep& law,
                        const CheckOptions& opt) {
    if (eq == "cf") return residual_cf(g, s.xi, s.eta, s.q, law, opt);
    if (eq == "laplace") return residual_laplace(g, s.xi, s.eta, s.q, law, opt);
    if (eq == "density-laplace") return residual_density_laplace(g, s.xi, s.eta, s.q, law, opt);
    if (eq == "mu") return residual_mu(g, s.xi, s.eta, s.q, law, opt);
    if (eq == "mu-fm") return residual_mu_fm(g, s.xi, s.eta, s.q, law, opt);
    if (eq == "mu-fv") return residual_mu_fv(g, s.xi, s.eta, s.q, law, opt);
    if (eq == "density-diff") return residual_density_diff(g, s.xi, s.eta, s.q, law, opt);
    if (eq == "generator") return generator_report(g, s, law, opt);
    throw ConfigError("unknown equation '" + eq + "'");
}

std::string fmt(double x) {
    std::ostringstream os;
    os << std::setprecision(4) << std::scientific << x;
    return os.str();
}

int cmd_simulate(const RunConfig& c, std::ostream& out) {
    const auto ref = lookup(c);
    const Setup s = resolve(c, ref);
    const auto t0 = std::chrono::steady_clock::now();
    const SampleBatch b = simulate(c, s);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const std::string path = c.out.empty() ? "samples.csv" : c.out;
    write_csv(b, path);
    write_text(path + ".json", batch_json(b, c, s, seconds).dump(2));
    out << "simulate n=" << b.n << " sampler=" << to_string(b.sampler) << " -> " << path << '\n';
    return Ok;
}

int cmd_check(const RunConfig& c, std::ostream& out) {
    if (c.equation.empty()) throw ConfigError("missing field check.equation (or pass --equation)");
    if (std::find(kEquations.begin(), kEquations.end(), c.equation) == kEquations.end())
        throw ConfigError("unknown equation '" + c.equation + "'");
    const auto ref = lookup(c);
    const LawRep law = law_for_check(c, ref);
    const Setup s = resolve(c, ref);
    const bool positive = positive_support(law);
    const auto grid = parse_grid(c.grid.empty() ? default_grid(c.equation, positive) : c.grid,
                                 positive || c.equation == "cf" || c.equation == "laplace");
    CheckOptions opt = c.check;
    if (c.tol) opt.tol = *c.tol;
    const ResidualReport r = dispatch(c.equation, grid, s, law, opt);
    if (!c.out.empty()) write_text(c.out, to_json(r));
    if (!c.plot.empty()) {
        std::ofstream os(c.plot);
        if (!os) throw ConfigError("cannot open " + c.plot + " for writing");
        os.precision(17);
        os << "z,value,series\n";
        for (std::size_t i = 0; i < r.grid.size(); ++i) os << r.grid[i] << ',' << r.residuals[i] << ",residual\n";
    }
    out << r.equation << " norm_sup=" << fmt(r.norm_sup) << " budget=" << fmt(r.budget) << " tol=" << fmt(r.tolerance)
        << ' ' << (r.pass ? "PASS" : "FAIL") << '\n';
    return r.pass ? Ok : Fail;
}

int cmd_gof(const RunConfig& c, std::ostream& out) {
    const auto ref = lookup(c);
    if (!ref) throw ConfigError("missing field reference (or pass --reference)");
    if (!ref->law.cdf) throw ConfigError("reference " + ref->name + " has no distribution function");
    std::vector<double> v;
    json j;
    if (c.samples) {
        v = read_csv(*c.samples);
        j["source"] = *c.samples;
    } else {
        const Setup s = resolve(c, ref);
        if (!applicable(*ref, s.xi, s.eta, s.q))
            throw ConfigError("reference " + ref->name + " is not the law of the configured (xi, eta, q)");
        const SampleBatch b = simulate(c, s);
        v = b.values;
        j["source"] = "simulation";
        j["sampler"] = to_string(b.sampler);
        j["seed"] = b.seed;
    }
    if (v.empty()) throw ConfigError("no draws to test");
    const auto sorted = sorted_copy(v);
    const double n = static_cast<double>(sorted.size());
    const double stat = ks(sorted, ref->law.cdf);
    const double threshold = c.tol ? *c.tol : kolmogorov_quantile(0.99) / std::sqrt(n);
    const bool pass = stat < threshold;
    j["reference"] = ref->name;
    j["n"] = sorted.size();
    j["ks"] = stat;
    j["threshold"] = threshold;
    j["pass"] = pass;
    if (!c.out.empty()) write_text(c.out, j.dump(2));
    out << "gof " << ref->name << " n=" << sorted.size() << " ks=" << fmt(stat) << " threshold=" << fmt(threshold)
        << ' ' << (pass ? "PASS" : "FAIL") << '\n';
    return pass ? Ok : Fail;
}

int cmd_reference(const RunConfig& c, bool list, std::ostream& out) {
    if (list) {
        for (const auto& name : reference_names()) {
            json d = json::object();
            for (const auto& [k, v] : reference_defaults(name)) d[k] = v;
            out << name << ' ' << d.dump() << '\n';
        }
        return Ok;
    }
    const auto ref = lookup(c);
    if (!ref) throw ConfigError("missing field reference (or pass --reference, or --list)");
    const bool positive = ref->law.support.lo >= 0.0;
    const auto grid = parse_grid(c.grid.empty() ? (positive ? "0.01:5:100" : "-5:5:100") : c.grid, positive);
    std::ostringstream os;
    os.precision(17);
    os << "z,value,series\n";
    for (double z : grid) {
        if (ref->law.density) os << z << ',' << ref->law.density(z) << ",density\n";
        if (ref->law.cdf) os << z << ',' << ref->law.cdf(z) << ",cdf\n";
    }
    if (c.out.empty()) out << os.str();
    else write_text(c.out, os.str());
    return Ok;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Killed exponential functionals of Levy processes", "kef"};
    app.require_subcommand(1);
    Flags f;

    auto* sim = app.add_subcommand("simulate", "draw V_{q,xi,eta} and write CSV plus a JSON sidecar");
    add_common(sim, f);

    auto* check = app.add_subcommand("check", "residual of a distributional equation");
    add_common(check, f);
    check->add_option("--equation", f.equation, "cf|laplace|density-laplace|mu|mu-fm|mu-fv|density-diff|generator");
    check->add_option("--grid", f.grid, "a:b:n, log or log:lo:hi:per_decade");
    check->add_option("--tol", f.tol, "residual tolerance");
    check->add_option("--k-mode", f.k_mode, "auto|estimate|explicit");
    check->add_flag("--assume-second-moment", f.assume_second_moment, "skip the moment check of the cf equation");
    check->add_flag("--track-atom", f.track_atom, "treat exact zeros in samples as an atom at 0");
    check->add_option("--plot", f.plot, "tidy CSV of the residuals");

    auto* gof = app.add_subcommand("gof", "Kolmogorov-Smirnov distance to a registry law");
    add_common(gof, f);
    gof->add_option("--tol", f.tol, "KS threshold (default: 99% asymptotic quantile)");

    auto* refc = app.add_subcommand("reference", "list registry laws or tabulate one");
    add_common(refc, f);
    refc->add_option("--grid", f.grid, "a:b:n");
    refc->add_flag("--list", f.list, "list names and default parameters");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? Ok : Config;
    }

    try {
        const RunConfig c = merge(f);
        if (*sim) return cmd_simulate(c, out);
        if (*check) return cmd_check(c, out);
        if (*gof) return cmd_gof(c, out);
        return cmd_reference(c, f.list, out);
    } catch (const ConfigError& e) {
        err << "kef: config error: " << e.what() << '\n';
        return Config;
    } catch (const DomainError& e) {
        err << "kef: config error: " << e.what() << '\n';
        return Config;
    } catch (const nlohmann::json::exception& e) {
        err << "kef: config error: " << e.what() << '\n';
        return Config;
    } catch (const NumericFailure& e) {
        err << "kef: numeric failure: " << e.what() << '\n';
        return Numeric;
    } catch (const std::exception& e) {
        err << "kef: numeric failure: " << e.what() << '\n';
        return Numeric;
    }
}

}  // namespace kef::cli
