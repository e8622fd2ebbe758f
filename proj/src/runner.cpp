#include "peaklab/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <Eigen/Core>

#include "peaklab/config.hpp"
#include "peaklab/io.hpp"
#include "peaklab/parallel.hpp"

namespace peaklab {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kNames = {"check", "mesh", "solve", "eigs", "evolve", "equilibria", "attractor", "rates"};

const std::vector<std::string> kNumericalFlags = {
    "discretization_dominance", "incomplete_ray",   "ray_endpoint_not_at_sink", "pairing_failure",
    "below_sampling_floor",     "energy_increase", "non_hyperbolic",           "budget_exhausted",
    "numerical_failure"};

/// Shared state of one command: outputs land under `dir`, every written file
/// is recorded for the manifest, and summary rows go to the screen table.
struct Context {
    ExperimentConfig cfg;
    fs::path dir;
    int jobs = 1;
    std::vector<std::string> files;
    std::vector<std::string> flags;
    std::vector<std::pair<std::string, std::string>> summary;
    json tables = json::array();

    fs::path file(const std::string& name) {
        files.push_back(name);
        return dir / name;
    }
    void flag(const std::string& f) {
        if (std::find(flags.begin(), flags.end(), f) == flags.end()) flags.push_back(f);
    }
    void row(const std::string& key, const std::string& value) { summary.emplace_back(key, value); }
    void table(const std::string& tag, const RateTable& t, bool theta = false) {
        const std::string name = "rate_" + t.name + ".csv";
        write_rate_csv(file(name), t, theta);
        json entry = rate_json(t);
        entry["tag"] = tag;
        entry["csv"] = name;
        tables.push_back(entry);
        for (const auto& f : t.flags) {
            if (is_numerical_flag(f)) flag(f);
        }
        row(t.name + " slope", t.fit ? fmt(t.fit->slope) : "undefined");
    }
};

std::string eps_tag(double eps) { return "eps_" + fmt(eps); }

Field interval_sample(const std::shared_ptr<const IntervalMesh>& mesh, const ScalarFn& fn) {
    return Field::sample(mesh, fn);
}

std::shared_ptr<const IntervalMesh> limit_mesh(const ExperimentConfig& cfg) {
    return build_interval_mesh(cfg.mesh.N, cfg.mesh.grading > 0.0 ? cfg.mesh.grading : default_grading(cfg.profile));
}

std::shared_ptr<const ThinMesh> thin_mesh(const ExperimentConfig& cfg) {
    const MeshParams mp = cfg.mesh.thin(cfg.profile);
    return build_thin_mesh(cfg.profile, mp.N_x, mp.density, mp.grading);
}

void require_eps(const ExperimentConfig& cfg, std::size_t count, const std::string& command) {
    if (cfg.eps_list.size() < count) {
        throw ValidationError("eps_list: " + command + " needs at least " + std::to_string(count) + " values");
    }
}

// ------------------------------------------------------------- commands

void cmd_check(Context& c) {
    HypothesisOptions opts;
    opts.A01 = c.cfg.coeff.A01;
    const HypothesisReport r = check_hypotheses(c.cfg.profile, opts);
    const NonlinearityReport nr = validate_nonlinearity(c.cfg.nonlinearity);
    json messages = json::array();
    for (const auto& m : r.messages) messages.push_back(m);
    json doc = {{"h1_ok", r.h1_ok},
                {"h3_ok", r.h3_ok},
                {"h2_finite", r.h2_finite},
                {"h2_integral", r.h2_finite ? json(r.h2_integral) : json(nullptr)},
                {"messages", messages},
                {"profile", {{"n", c.cfg.profile.n()},
                             {"alpha1", c.cfg.profile.alpha1()},
                             {"alpha2", c.cfg.profile.alpha2()},
                             {"K1", c.cfg.profile.K1()},
                             {"K2", c.cfg.profile.K2()},
                             {"x0", c.cfg.profile.x0()},
                             {"default_grading", default_grading(c.cfg.profile)}}},
                {"effective_ellipticity", c.cfg.coeff.effective_ellipticity()},
                {"nonlinearity", {{"family", c.cfg.nonlinearity.family},
                                  {"parameter", c.cfg.nonlinearity.parameter},
                                  {"m_f", nr.m_f},
                                  {"observed_m_f", nr.observed_m_f},
                                  {"growth_constant", nr.growth_constant}}}};
    write_json(c.file("hypotheses.json"), doc);
    CsvWriter w(c.file("hypotheses_W.csv"), {"x", "W"});
    for (const auto& [x, W] : r.W_samples) w.row({fmt(x), fmt(W)});
    w.close();
    c.row("H1", r.h1_ok ? "ok" : "violated");
    c.row("H2 integral", r.h2_finite ? fmt(r.h2_integral) : "divergent");
    c.row("H3", r.h3_ok ? "ok" : "violated");
    c.row("effective ellipticity", fmt(c.cfg.coeff.effective_ellipticity()));
}

void cmd_mesh(Context& c) {
    const auto im = limit_mesh(c.cfg);
    CsvWriter w(c.file("mesh_interval.csv"), {"node_index", "x", "weight_a_n"});
    for (int i = 0; i < im->size(); ++i) {
        w.row({std::to_string(i), fmt(im->nodes()[i]), fmt(c.cfg.profile.weight(im->nodes()[i]))});
    }
    w.close();
    const auto tm = thin_mesh(c.cfg);
    write_mesh_json(c.file("mesh_thin.json"), *tm);
    c.row("interval nodes", std::to_string(im->size()));
    c.row("interval min h", fmt(im->min_element_length()));
    c.row("thin vertices", std::to_string(tm->size()));
    c.row("thin triangles", std::to_string(tm->triangles().size()));
    c.row("thin area", fmt(tm->total_area()));
}

void cmd_solve(Context& c) {
    require_eps(c.cfg, 1, "solve");
    const auto mesh = thin_mesh(c.cfg);
    const OperatorPair limit = assemble_limit(c.cfg.profile, c.cfg.coeff, mesh->layers());
    const ThinSource f = c.cfg.source.fn();
    const auto& eps_list = c.cfg.eps_list;
    struct Out {
        Field u;
        double d_h1, d_l2, residual;
    };
    auto results = parallel_map(static_cast<int>(eps_list.size()), c.jobs, [&](int k) {
        const double eps = eps_list[k];
        const OperatorPair op = assemble_thin(c.cfg.profile, c.cfg.coeff, mesh, eps);
        const Field fe = Field::sample(mesh, eps, f);
        SolveInfo info;
        Field u = solve(op, fe, 0.0, &info);
        const Field u0 = solve(limit, average(fe));
        const Field diff = u - extend(u0, mesh, eps);
        return Out{u, norm(diff, NormKind::H1_eps, op), norm(diff, NormKind::L2, op), info.relative_residual};
    });
    const Field g = average(Field::sample(mesh, eps_list.front(), f));
    write_field_csv(c.file("solve_limit.csv"), solve(limit, g));
    CsvWriter w(c.file("solve_distances.csv"), {"eps", "distance_H1_eps", "distance_L2", "relative_residual"});
    for (std::size_t k = 0; k < eps_list.size(); ++k) {
        write_field_csv(c.file("solve_" + eps_tag(eps_list[k]) + ".csv"), results[k].u);
        w.row({fmt(eps_list[k]), fmt(results[k].d_h1), fmt(results[k].d_l2), fmt(results[k].residual)});
        c.row("d_H1eps(" + fmt(eps_list[k]) + ")", fmt(results[k].d_h1));
    }
    w.close();
}

void cmd_eigs(Context& c) {
    const int k = c.cfg.equilibria.eigs;
    const auto im = limit_mesh(c.cfg);
    const OperatorPair limit = assemble_limit(c.cfg.profile, c.cfg.coeff, im);
    const EigenSet es = eigenpairs(limit, k);
    write_matrix_coo(c.file("limit_stiffness.coo"), limit.stiffness);
    write_matrix_coo(c.file("limit_mass.coo"), limit.mass);
    CsvWriter w(c.file("eigs_limit.csv"), {"index", "lambda", "residual"});
    for (std::size_t i = 0; i < es.values.size(); ++i) {
        w.row({std::to_string(i + 1), fmt(es.values[i]), fmt(es.residuals[i])});
        write_field_csv(c.file("eigvec_limit_" + std::to_string(i + 1) + ".csv"), es.vectors[i]);
        c.row("lambda_" + std::to_string(i + 1), fmt(es.values[i]));
    }
    w.close();
    if (c.cfg.eps_list.empty()) return;
    const auto mesh = thin_mesh(c.cfg);
    auto thin = parallel_map(static_cast<int>(c.cfg.eps_list.size()), c.jobs, [&](int j) {
        return eigenpairs(assemble_thin(c.cfg.profile, c.cfg.coeff, mesh, c.cfg.eps_list[j]), k);
    });
    CsvWriter t(c.file("eigs_thin.csv"), {"eps", "index", "lambda", "residual"});
    for (std::size_t j = 0; j < thin.size(); ++j) {
        for (std::size_t i = 0; i < thin[j].values.size(); ++i) {
            t.row({fmt(c.cfg.eps_list[j]), std::to_string(i + 1), fmt(thin[j].values[i]), fmt(thin[j].residuals[i])});
        }
    }
    t.close();
}

void cmd_evolve(Context& c) {
    const double dt = c.cfg.time.dt;
    const double T = c.cfg.time.T_max;
    const int every = std::max(1, static_cast<int>(std::lround(0.01 / dt)));
    const auto im = limit_mesh(c.cfg);
    const OperatorPair limit = assemble_limit(c.cfg.profile, c.cfg.coeff, im);
    const Trajectory traj = evolve(limit, c.cfg.nonlinearity, interval_sample(im, c.cfg.u0.fn()), T, dt, every);
    write_trajectory_csv(c.file("trajectory_limit.csv"), traj);
    write_field_csv(c.file("evolve_limit_final.csv"), traj.states.back());
    if (traj.max_energy_increase > 1e-8) c.flag("energy_increase");
    c.row("limit final Linf", fmt(traj.linf.back()));
    c.row("max energy increase", fmt(traj.max_energy_increase));
    if (c.cfg.eps_list.empty()) return;
    const auto mesh = thin_mesh(c.cfg);
    auto trajs = parallel_map(static_cast<int>(c.cfg.eps_list.size()), c.jobs, [&](int j) {
        const double eps = c.cfg.eps_list[j];
        const OperatorPair op = assemble_thin(c.cfg.profile, c.cfg.coeff, mesh, eps);
        return evolve(op, c.cfg.nonlinearity, extend(Field::sample(mesh->layers(), c.cfg.u0.fn()), mesh, eps), T, dt,
                      every);
    });
    for (std::size_t j = 0; j < trajs.size(); ++j) {
        write_trajectory_csv(c.file("trajectory_" + eps_tag(c.cfg.eps_list[j]) + ".csv"), trajs[j]);
        c.row("Linf(T) eps=" + fmt(c.cfg.eps_list[j]), fmt(trajs[j].linf.back()));
    }
}

EnumerationOptions enumeration_options(const ExperimentConfig& cfg) {
    EnumerationOptions e;
    e.budget = cfg.equilibria.budget;
    return e;
}

void equilibrium_rates(Context& c, const EquilibriumAtlas& atlas) {
    PairingOptions po;
    po.mesh = c.cfg.mesh.thin(c.cfg.profile);
    po.isolation_radius = c.cfg.equilibria.isolation_radius;
    po.jobs = c.jobs;
    const auto entries = pair_and_rate(atlas, c.cfg.profile, c.cfg.coeff, c.cfg.nonlinearity, c.cfg.eps_list, po);
    write_pairing_csv(c.file("pairing.csv"), entries);
    for (const auto& e : entries) {
        for (const auto& f : e.rate.flags) {
            if (is_numerical_flag(f)) c.flag(f);
        }
        if (e.constant) continue;
        RateTable t = e.rate;
        t.name = "equilibrium_" + std::to_string(e.limit_index);
        c.table("equilibrium", t);
    }
}

EquilibriumAtlas limit_atlas(Context& c, const OperatorPair& op) {
    const EquilibriumAtlas atlas =
        enumerate_equilibria(op, c.cfg.nonlinearity, c.cfg.equilibria.strategy, enumeration_options(c.cfg));
    if (atlas.budget_exhausted) c.flag("budget_exhausted");
    for (const auto& e : atlas.entries) {
        if (!e.hyperbolic) c.flag("non_hyperbolic");
    }
    return atlas;
}

void cmd_equilibria(Context& c) {
    const auto mesh = thin_mesh(c.cfg);
    const OperatorPair op = assemble_limit(c.cfg.profile, c.cfg.coeff, mesh->layers());
    const EquilibriumAtlas atlas = limit_atlas(c, op);
    write_json(c.file("atlas.json"), atlas_json(atlas, op, "atlas_field"));
    for (std::size_t i = 0; i < atlas.entries.size(); ++i) {
        write_field_csv(c.file("atlas_field_" + std::to_string(i) + ".csv"), atlas.entries[i].state);
        const auto& e = atlas.entries[i];
        std::ostringstream os;
        os << "morse " << e.morse_index << ", gap " << fmt(e.gap) << ", Linf " << fmt(e.state.values().cwiseAbs().maxCoeff());
        c.row("equilibrium " + std::to_string(i), os.str());
    }
    if (c.cfg.eps_list.size() >= 3 && std::find(c.flags.begin(), c.flags.end(), "non_hyperbolic") == c.flags.end()) {
        equilibrium_rates(c, atlas);
    }
}

AttractorOptions attractor_options(const ExperimentConfig& cfg, int jobs) {
    AttractorOptions o;
    o.point_budget = cfg.attractor.point_budget;
    o.manifold.dt = cfg.attractor.dt;
    o.manifold.T_max = cfg.attractor.T_max;
    o.manifold.angles = cfg.attractor.angles;
    o.manifold.R_loc = cfg.attractor.R_loc;
    o.manifold.amplitudes = cfg.attractor.amplitudes;
    o.manifold.jobs = jobs;
    return o;
}

void cmd_attractor(Context& c) {
    const auto im = limit_mesh(c.cfg);
    const OperatorPair op = assemble_limit(c.cfg.profile, c.cfg.coeff, im);
    const EquilibriumAtlas atlas = limit_atlas(c, op);
    if (std::find(c.flags.begin(), c.flags.end(), "non_hyperbolic") != c.flags.end()) {
        throw NumericalError("attractor: the limit atlas is not hyperbolic");
    }
    const AttractorSample A = assemble_attractor(atlas, op, c.cfg.nonlinearity, attractor_options(c.cfg, c.jobs));
    for (const auto& f : A.flags) {
        if (is_numerical_flag(f)) c.flag(f);
    }
    json doc = attractor_json(A, op);
    std::vector<Field> B;
    for (double v : c.cfg.attractor.attraction_set) B.push_back(Field::constant(im, v));
    const AttractionCheck check =
        exponential_attraction_check(op, c.cfg.nonlinearity, A, B, c.cfg.attractor.attraction_T, c.cfg.attractor.dt);
    doc["attraction"] = {{"exponent", check.exponent}, {"convex_tail", check.convex_tail}, {"csv", "attraction.csv"}};
    write_json(c.file("attractor.json"), doc);
    CsvWriter w(c.file("attraction.csv"), {"t", "distance_" + std::string(to_string(A.kind))});
    for (const auto& [t, d] : check.series) w.row({fmt(t), fmt(d)});
    w.close();
    CsvWriter p(c.file("attractor_points.csv"), {"index", "provenance", "source", "ray", "t", "Linf",
                                                 "norm_" + std::string(to_string(A.kind))});
    for (std::size_t i = 0; i < A.points.size(); ++i) {
        const SamplePoint& s = A.points[i];
        p.row({std::to_string(i), s.provenance, std::to_string(s.source), std::to_string(s.ray), fmt(s.t),
               fmt(s.state.values().cwiseAbs().maxCoeff()), fmt(norm(s.state, A.kind, op))});
    }
    p.close();
    c.row("equilibria", std::to_string(A.equilibria));
    c.row("rays", std::to_string(A.rays));
    c.row("points", std::to_string(A.points.size()));
    c.row("sampling density", fmt(A.sampling_density));
    c.row("attraction exponent", fmt(check.exponent));
}

void cmd_rates(Context& c) {
    require_eps(c.cfg, 3, "rates");
    const MeshParams mp = c.cfg.mesh.thin(c.cfg.profile);
    for (const auto& name : c.cfg.rates) {
        if (name == "resolvent") {
            c.table("resolvent", resolvent_rate_experiment(c.cfg.profile, c.cfg.coeff, c.cfg.source.fn(),
                                                           c.cfg.eps_list, mp, c.jobs));
        } else if (name == "semigroup") {
            SemigroupRateOptions so;
            so.t_star = c.cfg.time.t_star;
            so.dt = c.cfg.time.dt;
            so.mesh = mp;
            so.jobs = c.jobs;
            SemigroupRateResult r = semigroup_rate_experiment(c.cfg.profile, c.cfg.coeff, c.cfg.nonlinearity,
                                                              c.cfg.u0.fn(), c.cfg.eps_list, so);
            r.x0.name = "semigroup_X0";
            r.x12.name = "semigroup_X12";
            c.table("semigroup", r.x0);
            c.table("semigroup", r.x12);
        } else if (name == "equilibrium") {
            const auto mesh = build_thin_mesh(c.cfg.profile, mp.N_x, mp.density, mp.grading);
            const OperatorPair op = assemble_limit(c.cfg.profile, c.cfg.coeff, mesh->layers());
            const EquilibriumAtlas atlas = limit_atlas(c, op);
            if (std::find(c.flags.begin(), c.flags.end(), "non_hyperbolic") != c.flags.end()) {
                throw NumericalError("rates: the limit atlas is not hyperbolic; pairing needs hyperbolic equilibria");
            }
            equilibrium_rates(c, atlas);
        } else if (name == "attractor") {
            AttractorRateOptions ao;
            ao.attractor = attractor_options(c.cfg, 1);
            ao.mesh = mp;
            ao.strategy = c.cfg.equilibria.strategy;
            ao.isolation_radius = c.cfg.equilibria.isolation_radius;
            ao.jobs = c.jobs;
            const AttractorRateResult r =
                attractor_rate_experiment(c.cfg.profile, c.cfg.coeff, c.cfg.nonlinearity, c.cfg.eps_list, ao);
            c.table("attractor", r.table, true);
            CsvWriter w(c.file("attractor_floor.csv"), {"eps", "sampling_floor_H1_eps", "dist_eps_to_limit",
                                                       "dist_limit_to_eps"});
            for (std::size_t k = 0; k < r.sampling_floor.size(); ++k) {
                w.row({fmt(r.table.pairs[k].first), fmt(r.sampling_floor[k]), fmt(r.semi_distances[k].first),
                       fmt(r.semi_distances[k].second)});
            }
            w.close();
        }
    }
}

// ------------------------------------------------------------- manifest

json file_inventory(const fs::path& dir, const std::vector<std::string>& files) {
    json inv = json::array();
    for (const auto& f : files) {
        const std::string bytes = read_text(dir / f);
        inv.push_back({{"path", f}, {"bytes", bytes.size()}, {"fnv1a64", hex64(fnv1a64(bytes))}});
    }
    return inv;
}

void update_manifest(const Context& c, Command command, double seconds, int exit_code, const std::string& message) {
    const fs::path path = c.dir / "manifest.json";
    const std::string hash = hex64(fnv1a64(c.cfg.canonical.dump()));
    json manifest;
    if (fs::exists(path)) {
        try {
            manifest = json::parse(read_text(path));
        } catch (const json::parse_error&) {
            manifest = json();
        }
    }
    if (!manifest.is_object() || manifest.value("config_hash", "") != hash) {
        manifest = json::object();
        manifest["config_hash"] = hash;
        manifest["config"] = c.cfg.canonical;
        manifest["seed"] = c.cfg.seed;
        manifest["steps"] = json::object();
    }
    std::ostringstream eigen;
    eigen << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION;
    manifest["versions"] = {{"peaklab", "1.0.0"}, {"eigen", eigen.str()}, {"compiler", __VERSION__}};
    json flags = json::array();
    for (const auto& f : c.flags) flags.push_back(f);
    manifest["steps"][to_string(command)] = {{"seconds", seconds},
                                             {"exit_code", exit_code},
                                             {"flags", flags},
                                             {"message", message},
                                             {"files", file_inventory(c.dir, c.files)}};
    write_json(path, manifest);
}

void print_summary(std::ostream& log, const std::string& title, const std::vector<std::pair<std::string, std::string>>& rows,
                   const std::vector<std::string>& flags) {
    std::size_t width = 8;
    for (const auto& [k, v] : rows) width = std::max(width, k.size());
    log << title << '\n' << std::string(title.size(), '-') << '\n';
    for (const auto& [k, v] : rows) log << "  " << std::left << std::setw(static_cast<int>(width)) << k << "  " << v << '\n';
    if (!flags.empty()) {
        log << "  flags:";
        for (const auto& f : flags) log << ' ' << f;
        log << '\n';
    }
}

std::string tag_title(const std::string& tag) {
    if (tag == "resolvent") return "resolvent estimate: elliptic solutions, O(eps) in H1_eps";
    if (tag == "equilibrium") return "equilibrium pairing: hyperbolic equilibria, O(eps) in H1_eps";
    if (tag == "semigroup") return "semigroup convergence at t_star, X^0 and X^{1/2}";
    if (tag == "attractor") return "attractor convergence: symmetric Hausdorff distance in H1_eps";
    return tag;
}

}  // namespace

Command parse_command(const std::string& name) {
    for (std::size_t i = 0; i < kNames.size(); ++i) {
        if (kNames[i] == name) return static_cast<Command>(i);
    }
    throw ValidationError("unknown command '" + name + "'");
}

std::string to_string(Command c) { return kNames.at(static_cast<std::size_t>(c)); }

const std::vector<std::string>& command_names() { return kNames; }

bool is_numerical_flag(const std::string& flag) {
    return std::find(kNumericalFlags.begin(), kNumericalFlags.end(), flag) != kNumericalFlags.end();
}

RunOutcome run(Command command, const RunOptions& options) {
    RunOutcome outcome;
    Context c;
    try {
        c.cfg = load_config(options.config_path);
        require(options.jobs >= 1, "--jobs must be >= 1");
    } catch (const ValidationError& e) {
        outcome.exit_code = exit_validation;
        outcome.message = e.what();
        if (options.log) *options.log << "error: " << e.what() << '\n';
        return outcome;
    }
    c.jobs = options.jobs;
    c.dir = options.out ? fs::path(*options.out) : fs::path(c.cfg.output_dir);
    outcome.out_dir = c.dir.string();
    fs::create_directories(c.dir);

    const auto start = std::chrono::steady_clock::now();
    try {
        switch (command) {
            case Command::check: cmd_check(c); break;
            case Command::mesh: cmd_mesh(c); break;
            case Command::solve: cmd_solve(c); break;
            case Command::eigs: cmd_eigs(c); break;
            case Command::evolve: cmd_evolve(c); break;
            case Command::equilibria: cmd_equilibria(c); break;
            case Command::attractor: cmd_attractor(c); break;
            case Command::rates: cmd_rates(c); break;
        }
        outcome.exit_code = c.flags.empty() ? exit_ok : exit_numerical;
    } catch (const ValidationError& e) {
        outcome.exit_code = exit_validation;
        outcome.message = e.what();
    } catch (const NumericalError& e) {
        outcome.exit_code = exit_numerical;
        outcome.message = e.what();
        c.flag("numerical_failure");
    }
    if (!c.tables.empty()) write_json(c.file(to_string(command) + "_tables.json"), c.tables);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    update_manifest(c, command, seconds, outcome.exit_code, outcome.message);

    outcome.files = c.files;
    outcome.flags = c.flags;
    if (options.log) {
        print_summary(*options.log, "peaklab " + to_string(command) + " -> " + c.dir.string(), c.summary, c.flags);
        if (!outcome.message.empty()) *options.log << "error: " << outcome.message << '\n';
    }
    return outcome;
}

RunOutcome report(const std::string& run_dir, std::ostream* log) {
    RunOutcome outcome;
    outcome.out_dir = run_dir;
    const fs::path dir(run_dir);
    const fs::path manifest_path = dir / "manifest.json";
    if (!fs::exists(manifest_path)) {
        outcome.exit_code = exit_validation;
        outcome.message = "report: no manifest.json in '" + run_dir + "'";
        if (log) *log << "error: " << outcome.message << '\n';
        return outcome;
    }
    json manifest;
    try {
        manifest = json::parse(read_text(manifest_path));
    } catch (const json::parse_error& e) {
        outcome.exit_code = exit_validation;
        outcome.message = std::string("report: unreadable manifest: ") + e.what();
        if (log) *log << "error: " << outcome.message << '\n';
        return outcome;
    }

    std::vector<fs::path> table_files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.size() > 12 && name.substr(name.size() - 12) == "_tables.json") table_files.push_back(entry.path());
    }
    std::sort(table_files.begin(), table_files.end());

    std::ostringstream md;
    md << "# peaklab run report\n\n";
    md << "config hash: `" << manifest.value("config_hash", "") << "`\n\n";
    md << "## Steps\n\n| command | exit | flags | files |\n|---|---|---|---|\n";
    for (const auto& [cmd, step] : manifest["steps"].items()) {
        std::string flags;
        for (const auto& f : step["flags"]) flags += (flags.empty() ? "" : ", ") + f.get<std::string>();
        md << "| " << cmd << " | " << step.value("exit_code", 0) << " | " << flags << " | " << step["files"].size()
           << " |\n";
    }

    const fs::path out = dir / "report";
    fs::create_directories(out);
    md << "\n## Rate experiments\n\n| tag | table | norm | points | slope | R^2 | plot data |\n|---|---|---|---|---|---|---|\n";
    std::vector<std::string> tags, names;
    for (const auto& path : table_files) {
        const json tables = json::parse(read_text(path));
        for (const auto& t : tables) {
            const std::string name = t.value("name", "rate");
            // equilibria and rates can both emit the same pairing tables
            if (std::find(names.begin(), names.end(), name) != names.end()) continue;
            names.push_back(name);
            const std::string tag = t.value("tag", name);
            if (std::find(tags.begin(), tags.end(), tag) == tags.end()) tags.push_back(tag);
            const std::string plot = "plot_" + name + ".dat";
            std::string text = "# eps distance_" + t.value("norm_kind", std::string("norm")) + "\n";
            for (const auto& p : t["pairs"]) text += fmt(p[0].get<double>()) + ' ' + fmt(p[1].get<double>()) + '\n';
            write_text(out / plot, text);
            outcome.files.push_back("report/" + plot);
            const bool has_slope = t.contains("slope") && !t["slope"].is_null();
            md << "| " << tag << " | " << name << " | " << t.value("norm_kind", std::string()) << " | "
               << t["pairs"].size() << " | " << (has_slope ? fmt(t["slope"].get<double>()) : "undefined") << " | "
               << (has_slope ? fmt(t["r_squared"].get<double>()) : "") << " | " << plot << " |\n";
        }
    }
    md << "\n## Result map\n\n";
    for (const auto& tag : tags) md << "- [" << tag << "] " << tag_title(tag) << "\n";
    if (tags.empty()) md << "- no rate experiments in this run\n";
    write_text(out / "summary.md", md.str());
    outcome.files.push_back("report/summary.md");
    if (log) *log << "report written to " << (out / "summary.md").string() << '\n';
    return outcome;
}

}  // namespace peaklab
