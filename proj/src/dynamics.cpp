#include "peaklab/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "peaklab/parallel.hpp"
#include "peaklab/transfer.hpp"

namespace peaklab {

// ------------------------------------------------------------ Nonlinearity

Nonlinearity Nonlinearity::cubic(double lambda) {
    Nonlinearity nl;
    nl.f = [lambda](double s) { return lambda * s - s * s * s; };
    nl.df = [lambda](double s) { return lambda - 3.0 * s * s; };
    nl.d2f = [](double s) { return -6.0 * s; };
    nl.primitive = [lambda](double s) { return 0.5 * lambda * s * s - 0.25 * s * s * s * s; };
    nl.gamma = 3.0;
    nl.m_f = lambda > 0.0 ? std::sqrt(lambda) : 1.0;
    nl.family = "cubic";
    nl.parameter = lambda;
    return nl;
}

Nonlinearity Nonlinearity::zero() {
    Nonlinearity nl;
    nl.f = [](double) { return 0.0; };
    nl.df = [](double) { return 0.0; };
    nl.d2f = [](double) { return 0.0; };
    nl.primitive = [](double) { return 0.0; };
    nl.gamma = 1.0;
    nl.m_f = 1.0;
    nl.family = "zero";
    return nl;
}

Nonlinearity Nonlinearity::with_parameter(double value) const {
    if (family == "cubic") return cubic(value);
    throw ValidationError("nonlinearity family '" + family + "' has no parameter");
}

std::vector<double> Nonlinearity::constant_equilibria(double range) const {
    // roots of g(s) = f(s) - s by sign scan plus bisection
    auto g = [this](double s) { return f(s) - s; };
    const int n = 40000;
    std::vector<double> roots;
    double s0 = -range, g0 = g(s0);
    for (int i = 1; i <= n; ++i) {
        const double s1 = -range + 2.0 * range * i / n;
        const double g1 = g(s1);
        if (g0 == 0.0) {
            roots.push_back(s0);
        } else if (g0 * g1 < 0.0) {
            double lo = s0, hi = s1, glo = g0;
            for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(lo)); ++it) {
                const double mid = 0.5 * (lo + hi);
                const double gm = g(mid);
                if ((gm < 0.0) == (glo < 0.0)) {
                    lo = mid;
                    glo = gm;
                } else {
                    hi = mid;
                }
            }
            double r = 0.5 * (lo + hi);
            // polish
            for (int it = 0; it < 3; ++it) {
                const double d = df(r) - 1.0;
                if (d != 0.0) r -= g(r) / d;
            }
            roots.push_back(r);
        }
        s0 = s1;
        g0 = g1;
    }
    return roots;
}

NonlinearityReport validate_nonlinearity(const Nonlinearity& nl, int samples) {
    require(nl.f && nl.df, "nonlinearity: f and f' must be provided");
    require(nl.gamma >= 1.0, "nonlinearity: gamma must be >= 1");
    require(nl.m_f > 0.0, "nonlinearity: m_f must be positive");
    NonlinearityReport report;
    report.m_f = nl.m_f;
    for (int i = 0; i < samples; ++i) {
        const double s = -50.0 + 100.0 * i / (samples - 1);
        const double fs = nl.f(s);
        const double dfs = nl.df(s);
        require(std::isfinite(fs) && std::isfinite(dfs), "nonlinearity: non-finite sample");
        report.growth_constant =
            std::max(report.growth_constant, std::abs(dfs) / (1.0 + std::pow(std::abs(s), nl.gamma - 1.0)));
        if (fs * s > 0.0) {
            report.observed_m_f = std::max(report.observed_m_f, std::abs(s));
            if (std::abs(s) >= nl.m_f) {
                std::ostringstream os;
                os << "nonlinearity: dissipativity f(s) s <= 0 violated at s = " << s << " (m_f = " << nl.m_f << ")";
                throw ValidationError(os.str());
            }
        }
    }
    if (nl.family == "cubic" && nl.parameter > 0.0) {
        const double spacing = 100.0 / (samples - 1);
        if (std::abs(nl.m_f - std::sqrt(nl.parameter)) > 1e-12 ||
            report.observed_m_f < std::sqrt(nl.parameter) - 2.0 * spacing) {
            throw ValidationError("nonlinearity: cubic family must have m_f = sqrt(lambda)");
        }
    }
    return report;
}

// ------------------------------------------------------------- IMEX Euler

ImexStepper::ImexStepper(const OperatorPair& op, Nonlinearity nl, double dt)
    : lumped_(op.lumped_mass), nl_(std::move(nl)), dt_(dt) {
    require(dt > 0.0, "step_imex: dt must be positive");
    SparseMatrix A = dt * op.stiffness;
    A += SparseMatrix(((1.0 + dt) * lumped_).asDiagonal());
    solver_ = std::make_shared<Eigen::SimplicialLDLT<SparseMatrix>>(A);
    if (solver_->info() != Eigen::Success) throw NumericalError("step_imex: factorization failed");
}

Vector ImexStepper::step_values(const Vector& u) const {
    Vector rhs(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) rhs[i] = lumped_[i] * (u[i] + dt_ * nl_.f(u[i]));
    return solver_->solve(rhs);
}

Field ImexStepper::step(const Field& u) const { return u.with_values(step_values(u.values())); }

Field ImexStepper::step(const Field& u, double dt) const {
    if (dt != dt_) {
        std::ostringstream os;
        os << "step_imex: stepper was factorized for dt = " << dt_ << ", called with dt = " << dt;
        throw ValidationError(os.str());
    }
    return step(u);
}

Field step_imex(const OperatorPair& op, const Nonlinearity& nl, const Field& u, double dt) {
    require(op.matches(u), "step_imex: field and operator live on different spaces");
    return ImexStepper(op, nl, dt).step(u);
}

double energy(const Field& u, const OperatorPair& op, const Nonlinearity& nl) {
    require(op.matches(u), "energy: field and operator live on different spaces");
    require(static_cast<bool>(nl.primitive), "energy: nonlinearity needs a primitive F");
    const Vector& v = u.values();
    double phi = 0.5 * v.dot(op.stiffness * v);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        phi += op.lumped_mass[i] * (0.5 * v[i] * v[i] - nl.primitive(v[i]));
    }
    return phi;
}

Trajectory evolve(const OperatorPair& op, const Nonlinearity& nl, const Field& u0, double T, double dt,
                  int snapshot_every) {
    require(op.matches(u0), "evolve: field and operator live on different spaces");
    require(T >= 0.0 && dt > 0.0, "evolve: need T >= 0 and dt > 0");
    require(snapshot_every >= 1, "evolve: snapshot_every must be >= 1");
    const ImexStepper stepper(op, nl, dt);
    const int steps = static_cast<int>(std::llround(T / dt));

    Trajectory traj;
    traj.interval_side = !op.on_omega();
    const SparseMatrix form = op.form();
    auto record = [&](double t, const Field& u, double phi) {
        traj.times.push_back(t);
        traj.states.push_back(u);
        const Vector& v = u.values();
        traj.norm_x0.push_back(std::sqrt(std::max(v.dot(op.mass * v), 0.0)));
        traj.norm_x12.push_back(std::sqrt(std::max(v.dot(form * v), 0.0)));
        traj.linf.push_back(v.cwiseAbs().maxCoeff());
        if (traj.interval_side) traj.energy.push_back(phi);
    };

    Field u = u0;
    double phi = traj.interval_side ? energy(u, op, nl) : 0.0;
    record(0.0, u, phi);
    for (int k = 1; k <= steps; ++k) {
        u = stepper.step(u);
        if (!(u.values().cwiseAbs().maxCoeff() <= 1e6)) {
            std::ostringstream os;
            os << "evolve: nodal blow-up |u| > 1e6 at t = " << k * dt;
            throw NumericalError(os.str());
        }
        if (traj.interval_side) {
            const double next = energy(u, op, nl);
            traj.max_energy_increase = std::max(traj.max_energy_increase, (next - phi) / (1.0 + std::abs(phi)));
            phi = next;
        }
        if (k % snapshot_every == 0 || k == steps) record(k * dt, u, phi);
    }
    return traj;
}

// ---------------------------------------------------------- rate experiment

SemigroupRateResult semigroup_rate_experiment(const Profile& p, const CoefficientSpec& coeff, const Nonlinearity& nl,
                                              const ScalarFn& u0, const std::vector<double>& eps_list,
                                              const SemigroupRateOptions& options) {
    require(options.t_star >= 0.5 && options.t_star <= 5.0, "semigroup_rate_experiment: t_star must lie in [0.5, 5]");
    require(!eps_list.empty(), "semigroup_rate_experiment: empty eps_list");
    for (std::size_t i = 1; i < eps_list.size(); ++i) {
        require(eps_list[i] < eps_list[i - 1], "semigroup_rate_experiment: eps_list must be decreasing");
    }
    validate_nonlinearity(nl);
    coeff.validate(p);
    const double dt = options.dt > 0.0 ? options.dt : options.t_star / 2000.0;
    const int steps = static_cast<int>(std::llround(options.t_star / dt));

    const auto mesh = build_thin_mesh(p, options.mesh.N_x, options.mesh.density, options.mesh.grading);
    const OperatorPair limit_op = assemble_limit(p, coeff, mesh->layers());
    Field limit_state = Field::sample(mesh->layers(), u0);
    const ImexStepper limit_stepper(limit_op, nl, dt);
    for (int k = 0; k < steps; ++k) limit_state = limit_stepper.step(limit_state);

    auto distances = parallel_map(static_cast<int>(eps_list.size()), options.jobs, [&](int i) {
        const double eps = eps_list[i];
        const OperatorPair op = assemble_thin(p, coeff, mesh, eps);
        const ImexStepper stepper(op, nl, dt);
        Field u = extend(Field::sample(mesh->layers(), u0), mesh, eps);
        for (int k = 0; k < steps; ++k) u = stepper.step(u);
        const Field diff = u - extend(limit_state, mesh, eps);
        return std::pair<double, double>{norm(diff, NormKind::L2, op), norm(diff, NormKind::H1_eps, op)};
    });

    SemigroupRateResult result;
    result.x0.name = "semigroup";
    result.x0.norm_kind = "L2";
    result.x12.name = "semigroup";
    result.x12.norm_kind = "H1_eps";
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        result.x0.pairs.emplace_back(eps_list[i], distances[i].first);
        result.x12.pairs.emplace_back(eps_list[i], distances[i].second);
        result.x0.mesh_h.push_back(mesh->max_x_spacing());
        result.x12.mesh_h.push_back(mesh->max_x_spacing());
    }
    result.x0.floor = result.x12.floor = 1e-12;
    result.x0.finalize();
    result.x12.finalize();
    return result;
}

}  // namespace peaklab
