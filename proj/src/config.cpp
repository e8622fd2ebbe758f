#include "peaklab/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace peaklab {

using nlohmann::json;

ScalarFn InitialData::fn() const {
    return [o = offset, a = amplitude, m = mode](double x) { return o + a * std::cos(m * M_PI * x); };
}

ThinSource SourceSpec::fn() const {
    return [m = mode, w = y_weight](double x, double y) { return std::cos(m * M_PI * x) * (1.0 + w * y); };
}

MeshParams MeshConfig::thin(const Profile& p) const {
    return MeshParams{N_x, density, grading > 0.0 ? grading : default_grading(p)};
}

namespace {

/// Walks one JSON object, recording type errors and unknown keys by path.
class Section {
public:
    Section(const json& node, std::string path, std::vector<std::string>& errors)
        : node_(node), path_(std::move(path)), errors_(errors) {
        if (!node_.is_object()) errors_.push_back(path_ + ": expected an object");
    }

    ~Section() {
        if (!node_.is_object()) return;
        for (const auto& item : node_.items()) {
            if (!seen_.count(item.key())) errors_.push_back(key(item.key()) + ": unknown key");
        }
    }

    bool has(const std::string& name) {
        seen_.insert(name);
        return node_.is_object() && node_.contains(name);
    }

    const json& at(const std::string& name) {
        seen_.insert(name);
        return node_.at(name);
    }

    std::string key(const std::string& name) const { return path_.empty() ? name : path_ + "." + name; }

    void number(const std::string& name, double& out) {
        if (!has(name)) return;
        const json& v = node_.at(name);
        if (!v.is_number()) {
            errors_.push_back(key(name) + ": expected a number");
            return;
        }
        out = v.get<double>();
        if (!std::isfinite(out)) errors_.push_back(key(name) + ": must be finite");
    }

    void integer(const std::string& name, int& out) {
        if (!has(name)) return;
        const json& v = node_.at(name);
        if (!v.is_number_integer()) {
            errors_.push_back(key(name) + ": expected an integer");
            return;
        }
        out = v.get<int>();
    }

    void text(const std::string& name, std::string& out) {
        if (!has(name)) return;
        const json& v = node_.at(name);
        if (!v.is_string()) {
            errors_.push_back(key(name) + ": expected a string");
            return;
        }
        out = v.get<std::string>();
    }

    void numbers(const std::string& name, std::vector<double>& out) {
        if (!has(name)) return;
        const json& v = node_.at(name);
        if (!v.is_array()) {
            errors_.push_back(key(name) + ": expected an array of numbers");
            return;
        }
        out.clear();
        for (const auto& e : v) {
            if (!e.is_number()) {
                errors_.push_back(key(name) + ": expected an array of numbers");
                return;
            }
            out.push_back(e.get<double>());
        }
    }

    void strings(const std::string& name, std::vector<std::string>& out) {
        if (!has(name)) return;
        const json& v = node_.at(name);
        if (!v.is_array()) {
            errors_.push_back(key(name) + ": expected an array of strings");
            return;
        }
        out.clear();
        for (const auto& e : v) {
            if (!e.is_string()) {
                errors_.push_back(key(name) + ": expected an array of strings");
                return;
            }
            out.push_back(e.get<std::string>());
        }
    }

    void check(bool ok, const std::string& name, const std::string& message) {
        if (!ok) errors_.push_back(key(name) + ": " + message);
    }

private:
    const json& node_;
    std::string path_;
    std::vector<std::string>& errors_;
    std::set<std::string> seen_;
};

template <class Fn>
void guarded(std::vector<std::string>& errors, const std::string& path, Fn&& fn) {
    try {
        fn();
    } catch (const ValidationError& e) {
        errors.push_back(path + ": " + e.what());
    }
}

void parse_profile(Section& root, ExperimentConfig& cfg, std::vector<std::string>& errors) {
    if (!root.has("profile")) {
        errors.push_back("profile: required");
        return;
    }
    Section s(root.at("profile"), "profile", errors);
    std::string kind = "power";
    double exponent = 1.0, coefficient = 1.0;
    int n = 1;
    std::vector<double> xs, values;
    s.text("kind", kind);
    s.number("exponent", exponent);
    s.number("coefficient", coefficient);
    s.integer("n", n);
    s.numbers("xs", xs);
    s.numbers("values", values);
    // bracket constants default to the exact power law
    double alpha1 = exponent, alpha2 = exponent, K1 = coefficient, K2 = coefficient, x0 = 0.5;
    const bool explicit_bracket = s.has("alpha1") || s.has("alpha2") || s.has("K1") || s.has("K2");
    s.number("alpha1", alpha1);
    s.number("alpha2", alpha2);
    s.number("K1", K1);
    s.number("K2", K2);
    s.number("x0", x0);
    guarded(errors, "profile", [&] {
        if (kind == "power") {
            cfg.profile = explicit_bracket ? Profile(PowerKind{exponent}, n, alpha1, alpha2, K1, K2, x0)
                                           : Profile(PowerKind{exponent}, n, exponent, exponent, 1.0, 1.0, x0);
        } else if (kind == "scaled_power") {
            cfg.profile = Profile(ScaledPowerKind{coefficient, exponent}, n, alpha1, alpha2, K1, K2, x0);
        } else if (kind == "tabulated") {
            require(!xs.empty() && xs.size() == values.size(), "xs and values must be non-empty and equally long");
            require(explicit_bracket, "tabulated profiles need alpha1, alpha2, K1, K2");
            cfg.profile = Profile(TabulatedKind{xs, values}, n, alpha1, alpha2, K1, K2, x0);
        } else {
            throw ValidationError("unknown kind '" + kind + "' (power, scaled_power, tabulated)");
        }
    });
}

void parse_coefficients(Section& root, ExperimentConfig& cfg, std::vector<std::string>& errors) {
    if (!root.has("coefficients")) return;
    Section s(root.at("coefficients"), "coefficients", errors);
    if (s.has("A01")) {
        const json& a = s.at("A01");
        if (a.is_number()) {
            cfg.A01_c0 = a.get<double>();
            cfg.A01_c1 = 0.0;
        } else {
            Section lin(a, "coefficients.A01", errors);
            lin.number("c0", cfg.A01_c0);
            lin.number("c1", cfg.A01_c1);
        }
    }
    s.number("A12", cfg.A12);
    s.number("C0", cfg.coeff.C0);
    s.number("alpha0", cfg.coeff.alpha0);
    s.number("eps0", cfg.coeff.eps0);
    s.integer("k_max", cfg.coeff.k_max);
    s.check(cfg.coeff.eps0 > 0.0 && cfg.coeff.eps0 < 1.0, "eps0", "must lie in (0, 1)");
}

void parse_nonlinearity(Section& root, ExperimentConfig& cfg, std::vector<std::string>& errors) {
    if (!root.has("nonlinearity")) return;
    Section s(root.at("nonlinearity"), "nonlinearity", errors);
    std::string family = "cubic";
    double lambda = 5.0;
    double m_f = std::nan("");
    s.text("family", family);
    s.number("lambda", lambda);
    s.number("m_f", m_f);
    guarded(errors, "nonlinearity", [&] {
        if (family == "cubic") {
            cfg.nonlinearity = Nonlinearity::cubic(lambda);
        } else if (family == "zero") {
            cfg.nonlinearity = Nonlinearity::zero();
        } else {
            throw ValidationError("unknown family '" + family + "' (cubic, zero)");
        }
        if (!std::isnan(m_f)) cfg.nonlinearity.m_f = m_f;
        validate_nonlinearity(cfg.nonlinearity);
    });
}

}  // namespace

ExperimentConfig parse_config(const json& doc) {
    std::vector<std::string> errors;
    ExperimentConfig cfg;
    {
        Section root(doc, "", errors);
        if (!doc.is_object()) throw ValidationError("config: top level must be an object");
        parse_profile(root, cfg, errors);
        parse_coefficients(root, cfg, errors);
        parse_nonlinearity(root, cfg, errors);

        if (root.has("mesh")) {
            Section s(root.at("mesh"), "mesh", errors);
            s.integer("N", cfg.mesh.N);
            s.integer("N_x", cfg.mesh.N_x);
            s.number("grading", cfg.mesh.grading);
            s.number("density", cfg.mesh.density);
            s.check(cfg.mesh.N >= 4, "N", "must be >= 4");
            s.check(cfg.mesh.N_x >= 8, "N_x", "must be >= 8");
            s.check(cfg.mesh.grading == 0.0 || cfg.mesh.grading >= 1.0, "grading", "must be 0 (default) or >= 1");
            s.check(cfg.mesh.density > 0.0, "density", "must be positive");
        }

        root.numbers("eps_list", cfg.eps_list);
        for (std::size_t i = 0; i < cfg.eps_list.size(); ++i) {
            const double e = cfg.eps_list[i];
            if (!(e > 0.0 && e <= cfg.coeff.eps0)) {
                std::ostringstream os;
                os << "eps_list[" << i << "]: " << e << " outside (0, eps0 = " << cfg.coeff.eps0 << "]";
                errors.push_back(os.str());
            }
            if (i > 0 && !(e < cfg.eps_list[i - 1])) {
                std::ostringstream os;
                os << "eps_list[" << i << "]: must be strictly decreasing";
                errors.push_back(os.str());
            }
        }

        if (root.has("time")) {
            Section s(root.at("time"), "time", errors);
            s.number("t_star", cfg.time.t_star);
            s.number("dt", cfg.time.dt);
            s.number("T_max", cfg.time.T_max);
            s.check(cfg.time.t_star > 0.0, "t_star", "must be positive");
            s.check(cfg.time.dt > 0.0 && cfg.time.dt <= cfg.time.t_star, "dt", "must lie in (0, t_star]");
            s.check(cfg.time.T_max > 0.0, "T_max", "must be positive");
        }

        if (root.has("norm")) {
            std::string name;
            root.text("norm", name);
            guarded(errors, "norm", [&] { cfg.norm = parse_norm_kind(name); });
        }
        if (root.has("seed")) {
            const json& v = root.at("seed");
            if (v.is_number_unsigned()) {
                cfg.seed = v.get<std::uint64_t>();
            } else {
                errors.push_back("seed: expected a non-negative integer");
            }
        }
        root.text("output_dir", cfg.output_dir);

        if (root.has("initial")) {
            Section s(root.at("initial"), "initial", errors);
            s.number("offset", cfg.u0.offset);
            s.number("amplitude", cfg.u0.amplitude);
            s.integer("mode", cfg.u0.mode);
        }
        if (root.has("source")) {
            Section s(root.at("source"), "source", errors);
            s.integer("mode", cfg.source.mode);
            s.number("y_weight", cfg.source.y_weight);
        }
        if (root.has("equilibria")) {
            Section s(root.at("equilibria"), "equilibria", errors);
            std::string strategy = "lambda_continuation";
            s.text("strategy", strategy);
            guarded(errors, "equilibria.strategy", [&] { cfg.equilibria.strategy = parse_seed_strategy(strategy); });
            s.integer("budget", cfg.equilibria.budget);
            s.number("isolation_radius", cfg.equilibria.isolation_radius);
            s.integer("eigs", cfg.equilibria.eigs);
            s.check(cfg.equilibria.budget >= 1, "budget", "must be >= 1");
            s.check(cfg.equilibria.isolation_radius > 0.0, "isolation_radius", "must be positive");
            s.check(cfg.equilibria.eigs >= 1, "eigs", "must be >= 1");
        }
        if (root.has("attractor")) {
            Section s(root.at("attractor"), "attractor", errors);
            auto& a = cfg.attractor;
            s.integer("point_budget", a.point_budget);
            s.number("dt", a.dt);
            s.number("T_max", a.T_max);
            s.integer("angles", a.angles);
            s.number("R_loc", a.R_loc);
            s.numbers("amplitudes", a.amplitudes);
            s.number("attraction_T", a.attraction_T);
            s.numbers("attraction_set", a.attraction_set);
            s.check(a.point_budget >= 1, "point_budget", "must be >= 1");
            s.check(a.dt > 0.0, "dt", "must be positive");
            s.check(a.angles >= 2 && a.angles % 2 == 0, "angles", "must be even and >= 2");
            s.check(!a.amplitudes.empty(), "amplitudes", "must be non-empty");
            s.check(a.attraction_T >= 1.0, "attraction_T", "must be >= 1");
        }
        if (root.has("rates")) {
            root.strings("rates", cfg.rates);
            for (const auto& r : cfg.rates) {
                if (r != "resolvent" && r != "semigroup" && r != "equilibrium" && r != "attractor") {
                    errors.push_back("rates: unknown experiment '" + r +
                                     "' (resolvent, semigroup, equilibrium, attractor)");
                }
            }
        }
    }
    if (errors.empty()) {
        guarded(errors, "coefficients", [&] {
            cfg.coeff.A01 = [c0 = cfg.A01_c0, c1 = cfg.A01_c1](double x) { return c0 + c1 * x; };
            if (cfg.A12 != 0.0) {
                cfg.coeff.higher_terms.push_back({1, [](double, double) { return 0.0; },
                                                  [v = cfg.A12](double, double) { return v; },
                                                  [](double, double) { return 0.0; }});
            }
            cfg.coeff.validate(cfg.profile);
            for (int i = 0; i <= 64; ++i) require(cfg.coeff.A01(i / 64.0) > 0.0, "A01 must be positive on [0, 1]");
        });
    }
    if (!errors.empty()) {
        std::string message = "invalid config:";
        for (const auto& e : errors) message += "\n  " + e;
        throw ValidationError(message);
    }
    cfg.canonical = doc;
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config: cannot open '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("config: " + path + ": " + e.what());
    }
    return parse_config(doc);
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex64(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

}  // namespace peaklab
