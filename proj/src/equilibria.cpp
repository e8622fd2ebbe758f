#include "peaklab/equilibria.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "peaklab/eigensolver.hpp"
#include "peaklab/parallel.hpp"
#include "peaklab/transfer.hpp"

namespace peaklab {

namespace {

Vector residual(const OperatorPair& op, const Nonlinearity& nl, const Vector& u) {
    Vector r = op.stiffness * u;
    for (Eigen::Index i = 0; i < u.size(); ++i) r[i] += op.lumped_mass[i] * (u[i] - nl.f(u[i]));
    return r;
}

SparseMatrix jacobian(const OperatorPair& op, const Nonlinearity& nl, const Vector& u) {
    Vector diag(u.size());
    for (Eigen::Index i = 0; i < u.size(); ++i) diag[i] = op.lumped_mass[i] * (1.0 - nl.df(u[i]));
    SparseMatrix J = op.stiffness;
    J += SparseMatrix(diag.asDiagonal());
    return J;
}

Field proto_field(const OperatorPair& op) {
    if (op.on_omega()) return Field::zeros(std::get<std::shared_ptr<const ThinMesh>>(op.mesh), op.eps);
    return Field::zeros(std::get<std::shared_ptr<const IntervalMesh>>(op.mesh));
}

/// Dual norm sqrt(r^T (K + M_L)^{-1} r).
class DualNorm {
public:
    explicit DualNorm(const OperatorPair& op) {
        SparseMatrix A = op.stiffness;
        A += SparseMatrix(op.lumped_mass.asDiagonal());
        solver_.compute(A);
        if (solver_.info() != Eigen::Success) throw NumericalError("newton: K + M_L factorization failed");
    }
    double operator()(const Vector& r) const {
        const Vector z = solver_.solve(r);
        return std::sqrt(std::max(r.dot(z), 0.0));
    }

private:
    Eigen::SimplicialLDLT<SparseMatrix> solver_;
};

double x12_distance(const OperatorPair& op, const SparseMatrix& form, const Vector& a, const Vector& b) {
    (void)op;
    const Vector d = a - b;
    return std::sqrt(std::max(d.dot(form * d), 0.0));
}

}  // namespace

bool Equilibrium::is_constant(double tol) const {
    const Vector& v = state.values();
    return v.maxCoeff() - v.minCoeff() <= tol * std::max(1.0, v.cwiseAbs().maxCoeff());
}

EigenSet linearization_spectrum(const OperatorPair& op, const Nonlinearity& nl, const Field& state, int k) {
    require(op.matches(state), "linearization_spectrum: field and operator live on different spaces");
    const Vector& u = state.values();
    const SparseMatrix J = jacobian(op, nl, u);
    const SparseMatrix B = SparseMatrix(op.lumped_mass.asDiagonal());
    double max_df = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < u.size(); ++i) max_df = std::max(max_df, nl.df(u[i]));
    const double shift = 1.0 - max_df - 1.0;

    const int n = op.size();
    k = std::min(k, n - 1);
    GeneralizedEigen ge;
    while (true) {
        ge = smallest_eigenpairs(J, B, k, shift);
        if (ge.values[k - 1] > 0.0 || k >= n - 1) break;
        k = std::min(2 * k, n - 1);
    }
    EigenSet set;
    set.residuals = ge.residuals;
    const Field proto = proto_field(op);
    for (int j = 0; j < k; ++j) {
        set.values.push_back(ge.values[j]);
        Vector v = ge.vectors.col(j);
        Eigen::Index imax;
        v.cwiseAbs().maxCoeff(&imax);
        if (v[imax] < 0.0) v = -v;
        set.vectors.push_back(proto.with_values(std::move(v)));
    }
    return set;
}

void attach_spectrum(Equilibrium& e, const OperatorPair& op, const Nonlinearity& nl, const NewtonOptions& options) {
    e.spectrum = linearization_spectrum(op, nl, e.state, options.spectrum_k);
    e.morse_index = 0;
    e.gap = std::numeric_limits<double>::infinity();
    for (double lam : e.spectrum.values) {
        if (lam < 0.0) ++e.morse_index;
        e.gap = std::min(e.gap, std::abs(lam));
    }
    e.hyperbolic = e.gap >= options.gap_tol;
}

double hyperbolicity_gap(const Equilibrium& e) {
    require(!e.spectrum.values.empty(), "hyperbolicity_gap: equilibrium has no spectrum attached");
    double gap = std::numeric_limits<double>::infinity();
    for (double lam : e.spectrum.values) gap = std::min(gap, std::abs(lam));
    return gap;
}

Equilibrium newton_solve(const OperatorPair& op, const Nonlinearity& nl, const Field& guess,
                         const NewtonOptions& options) {
    require(op.matches(guess), "newton_solve: guess and operator live on different spaces");
    const DualNorm dual(op);
    Vector u = guess.values();
    Vector r = residual(op, nl, u);
    double rn = dual(r);

    Equilibrium e;
    int it = 0;
    for (; it < options.max_iter && rn > options.tol; ++it) {
        const SparseMatrix J = jacobian(op, nl, u);
        Vector delta;
        Eigen::SimplicialLDLT<SparseMatrix> ldlt(J);
        bool ok = false;
        if (ldlt.info() == Eigen::Success) {
            delta = ldlt.solve(-r);
            ok = delta.allFinite() && (J * delta + r).norm() <= 1e-8 * std::max(r.norm(), 1e-300);
        }
        if (!ok) {
            Eigen::SparseLU<SparseMatrix> lu;
            lu.analyzePattern(J);
            lu.factorize(J);
            if (lu.info() == Eigen::Success) {
                delta = lu.solve(-r);
                ok = delta.allFinite() && (J * delta + r).norm() <= 1e-6 * std::max(r.norm(), 1e-300);
            }
        }
        if (!ok) {
            e.note = "singular_jacobian";
            break;
        }
        // backtracking on the dual residual norm
        double step = 1.0;
        Vector trial;
        double trial_norm = 0.0;
        for (int bt = 0; bt < 30; ++bt) {
            trial = u + step * delta;
            trial_norm = dual(residual(op, nl, trial));
            if (std::isfinite(trial_norm) && trial_norm < (1.0 - 1e-4 * step) * rn) break;
            step *= 0.5;
        }
        if (!std::isfinite(trial_norm) || trial_norm >= rn) {
            // no decrease: accept the full step once stagnation is at roundoff level
            if (rn <= 1e3 * options.tol) {
                break;
            }
            u += delta;
            r = residual(op, nl, u);
            rn = dual(r);
            continue;
        }
        u = std::move(trial);
        r = residual(op, nl, u);
        rn = trial_norm;
        if (!(u.cwiseAbs().maxCoeff() < 1e8)) break;
    }
    e.state = guess.with_values(u);
    e.residual = rn;
    e.iterations = it;
    e.converged = rn <= options.tol;
    if (!e.converged) {
        if (e.note.empty()) {
            std::ostringstream os;
            os << "newton_solve: no convergence after " << it << " iterations (residual " << rn << ")";
            throw NumericalError(os.str());
        }
        return e;
    }
    attach_spectrum(e, op, nl, options);
    return e;
}

SeedStrategy parse_seed_strategy(const std::string& name) {
    if (name == "constant_seeds") return SeedStrategy::constant_seeds;
    if (name == "eigenfunction_seeds") return SeedStrategy::eigenfunction_seeds;
    if (name == "lambda_continuation") return SeedStrategy::lambda_continuation;
    throw ValidationError("unknown seed strategy '" + name + "'");
}

namespace {

class AtlasBuilder {
public:
    AtlasBuilder(const OperatorPair& op, const EnumerationOptions& options)
        : op_(op), form_(op.form()), options_(options) {}

    bool can_solve() const { return atlas_.solves < options_.budget; }

    /// Newton from `seed`; returns the index of the (possibly existing) entry or -1.
    int try_seed(const Nonlinearity& nl, const Field& seed) {
        if (!can_solve()) {
            atlas_.budget_exhausted = true;
            return -1;
        }
        ++atlas_.solves;
        Equilibrium e;
        try {
            e = newton_solve(op_, nl, seed, options_.newton);
        } catch (const NumericalError&) {
            return -1;
        }
        if (!e.converged) return -1;
        return insert(std::move(e));
    }

    int insert(Equilibrium e) {
        for (std::size_t i = 0; i < atlas_.entries.size(); ++i) {
            const double d = x12_distance(op_, form_, atlas_.entries[i].state.values(), e.state.values());
            const double scale = 1.0 + std::sqrt(std::max(e.state.values().dot(form_ * e.state.values()), 0.0));
            if (d <= options_.dedup_tol * scale) return static_cast<int>(i);
        }
        atlas_.entries.push_back(std::move(e));
        return static_cast<int>(atlas_.entries.size()) - 1;
    }

    EquilibriumAtlas& atlas() { return atlas_; }
    void clear_entries() { atlas_.entries.clear(); }

private:
    const OperatorPair& op_;
    SparseMatrix form_;
    const EnumerationOptions& options_;
    EquilibriumAtlas atlas_;
};

std::vector<double> constant_seed_values(const Nonlinearity& nl) {
    std::vector<double> seeds = nl.constant_equilibria();
    seeds.push_back(nl.m_f);
    seeds.push_back(-nl.m_f);
    return seeds;
}

void seed_from_eigenfunctions(AtlasBuilder& builder, const Nonlinearity& nl, const EnumerationOptions& options,
                              std::size_t start) {
    for (std::size_t q = start; q < builder.atlas().entries.size(); ++q) {
        const Equilibrium anchor = builder.atlas().entries[q];
        const int modes = std::min<int>(options.seed_modes, static_cast<int>(anchor.spectrum.vectors.size()));
        for (int m = 0; m < modes; ++m) {
            const Vector& phi = anchor.spectrum.vectors[m].values();
            const double scale = phi.cwiseAbs().maxCoeff();
            if (scale == 0.0) continue;
            for (double amp : options.seed_amplitudes) {
                for (double sign : {1.0, -1.0}) {
                    if (!builder.can_solve()) {
                        builder.atlas().budget_exhausted = true;
                        return;
                    }
                    builder.try_seed(nl, anchor.state.with_values(anchor.state.values() + sign * amp / scale * phi));
                }
            }
        }
    }
}

void sort_atlas(EquilibriumAtlas& atlas, const OperatorPair& op) {
    auto mean = [&](const Equilibrium& e) { return op.lumped_mass.dot(e.state.values()) / op.lumped_mass.sum(); };
    std::stable_sort(atlas.entries.begin(), atlas.entries.end(), [&](const Equilibrium& a, const Equilibrium& b) {
        if (a.morse_index != b.morse_index) return a.morse_index < b.morse_index;
        return mean(a) < mean(b);
    });
}

}  // namespace

EquilibriumAtlas enumerate_equilibria(const OperatorPair& op, const Nonlinearity& nl, SeedStrategy strategy,
                                      const EnumerationOptions& options) {
    require(options.budget >= 3, "enumerate_equilibria: budget must allow >= 3 seeds");
    validate_nonlinearity(nl);
    AtlasBuilder builder(op, options);
    const Field proto = proto_field(op);

    auto constant_pass = [&](const Nonlinearity& g) {
        for (double s : constant_seed_values(g)) {
            builder.try_seed(g, proto.with_values(Vector::Constant(op.size(), s)));
        }
    };

    switch (strategy) {
        case SeedStrategy::constant_seeds:
            constant_pass(nl);
            break;
        case SeedStrategy::eigenfunction_seeds:
            constant_pass(nl);
            seed_from_eigenfunctions(builder, nl, options, 0);
            break;
        case SeedStrategy::lambda_continuation: {
            const double target = nl.parameter;
            const double start = std::min(target, 0.5);
            const int steps = std::max(1, static_cast<int>(std::ceil((target - start) / options.continuation_step)));
            constant_pass(nl.with_parameter(start));
            const int reserve = 8;
            // crossing modes (mode, sign) per entry that have not yet produced a new branch
            std::vector<std::vector<std::pair<int, double>>> pending(builder.atlas().entries.size());
            for (int s = 1; s < steps; ++s) {
                const std::vector<Equilibrium> previous = builder.atlas().entries;
                // keep enough budget to land every branch on the target
                if (options.budget - builder.atlas().solves < 2 * static_cast<int>(previous.size()) + reserve) {
                    builder.atlas().budget_exhausted = true;
                    break;
                }
                const Nonlinearity next = nl.with_parameter(start + (target - start) * s / steps);
                builder.clear_entries();
                std::vector<std::vector<std::pair<int, double>>> carried;
                auto pending_of = [&](int idx) -> std::vector<std::pair<int, double>>& {
                    if (static_cast<int>(carried.size()) <= idx) carried.resize(idx + 1);
                    return carried[idx];
                };
                for (std::size_t b = 0; b < previous.size(); ++b) {
                    const int idx = builder.try_seed(next, previous[b].state);
                    if (idx < 0) continue;
                    auto& todo = pending_of(idx);
                    todo.insert(todo.end(), pending[b].begin(), pending[b].end());
                    const int crossed = builder.atlas().entries[idx].morse_index;
                    for (int m = previous[b].morse_index; m < crossed; ++m) {
                        todo.emplace_back(m, 1.0);
                        todo.emplace_back(m, -1.0);
                    }
                }
                const std::size_t continued = builder.atlas().entries.size();
                for (std::size_t idx = 0; idx < continued; ++idx) {
                    const Equilibrium now = builder.atlas().entries[idx];
                    std::vector<std::pair<int, double>> unresolved;
                    for (const auto& [m, sign] : pending_of(static_cast<int>(idx))) {
                        if (m >= static_cast<int>(now.spectrum.vectors.size())) continue;
                        const Vector& phi = now.spectrum.vectors[m].values();
                        const double scale = phi.cwiseAbs().maxCoeff();
                        bool found = false;
                        for (double amp : options.seed_amplitudes) {
                            const std::size_t before = builder.atlas().entries.size();
                            const int hit = builder.try_seed(
                                next, now.state.with_values(now.state.values() + sign * amp / scale * phi));
                            if (hit >= static_cast<int>(before)) {
                                found = true;
                                break;
                            }
                        }
                        if (!found) unresolved.emplace_back(m, sign);
                    }
                    pending_of(static_cast<int>(idx)) = std::move(unresolved);
                }
                carried.resize(builder.atlas().entries.size());
                pending = std::move(carried);
            }
            const std::vector<Equilibrium> previous = builder.atlas().entries;
            builder.clear_entries();
            for (const auto& branch : previous) builder.try_seed(nl, branch.state);
            constant_pass(nl);
            break;
        }
    }
    EquilibriumAtlas atlas = std::move(builder.atlas());
    sort_atlas(atlas, op);
    if (atlas.budget_exhausted) atlas.notes.push_back("budget exhausted");
    return atlas;
}

// ------------------------------------------------------------ pairing/rate

std::vector<PairingEntry> pair_and_rate(const EquilibriumAtlas& atlas0, const Profile& p, const CoefficientSpec& coeff,
                                        const Nonlinearity& nl, const std::vector<double>& eps_list,
                                        const PairingOptions& options) {
    require(!atlas0.entries.empty(), "pair_and_rate: empty limit atlas");
    for (const auto& e : atlas0.entries) {
        if (!e.hyperbolic) {
            std::ostringstream os;
            os << "pair_and_rate: limit equilibrium with gap " << e.gap << " < gap_tol " << options.newton.gap_tol
               << " is not hyperbolic";
            throw ValidationError(os.str());
        }
    }
    for (std::size_t i = 1; i < eps_list.size(); ++i) {
        require(eps_list[i] < eps_list[i - 1], "pair_and_rate: eps_list must be decreasing");
    }
    coeff.validate(p);
    const auto mesh = build_thin_mesh(p, options.mesh.N_x, options.mesh.density, options.mesh.grading);

    struct Cell {
        double d12 = 0.0, d0 = 0.0;
        bool unique = false;
        int morse = 0;
        bool failed = false;
    };
    const int ne = static_cast<int>(atlas0.entries.size());
    auto rows = parallel_map(static_cast<int>(eps_list.size()), options.jobs, [&](int k) {
        const double eps = eps_list[k];
        const OperatorPair op = assemble_thin(p, coeff, mesh, eps);
        const SparseMatrix form = op.form();
        std::vector<Cell> row(ne);
        for (int i = 0; i < ne; ++i) {
            const Field seed = extend(atlas0.entries[i].state, mesh, eps);
            Cell& c = row[i];
            Equilibrium e;
            try {
                e = newton_solve(op, nl, seed, options.newton);
            } catch (const NumericalError&) {
                c.failed = true;
                continue;
            }
            if (!e.converged) {
                c.failed = true;
                continue;
            }
            const Field diff = e.state - seed;
            c.d12 = norm(diff, NormKind::H1_eps, op);
            c.d0 = norm(diff, NormKind::L2, op);
            c.morse = e.morse_index;
            if (c.d12 > options.isolation_radius) {
                c.failed = true;
                continue;
            }
            // second solve from a perturbed seed inside the ball
            Field bump = Field::sample(mesh, eps, [](double x, double y) { return std::cos(2.0 * M_PI * x) + y; });
            const double bn = norm(bump, NormKind::H1_eps, op);
            const Field seed2 = seed + (0.2 * options.isolation_radius / bn) * bump;
            try {
                const Equilibrium e2 = newton_solve(op, nl, seed2, options.newton);
                c.unique = e2.converged && norm(e2.state - e.state, NormKind::H1_eps, op) <= 1e-6;
            } catch (const NumericalError&) {
                c.unique = false;
            }
        }
        return row;
    });

    std::vector<PairingEntry> out;
    for (int i = 0; i < ne; ++i) {
        PairingEntry entry;
        entry.limit_index = i;
        entry.constant = atlas0.entries[i].is_constant();
        entry.rate.name = "equilibrium";
        entry.rate.norm_kind = "H1_eps";
        entry.rate.floor = 1e-10;
        for (std::size_t k = 0; k < eps_list.size(); ++k) {
            const Cell& c = rows[k][i];
            if (c.failed) {
                entry.rate.flags.push_back("pairing_failure");
                continue;
            }
            entry.eps.push_back(eps_list[k]);
            entry.distance_x12.push_back(c.d12);
            entry.distance_x0.push_back(c.d0);
            entry.unique_in_ball.push_back(c.unique);
            entry.morse_index.push_back(c.morse);
            entry.rate.pairs.emplace_back(eps_list[k], c.d12);
            entry.rate.mesh_h.push_back(mesh->max_x_spacing());
        }
        if (!entry.constant) entry.rate.finalize();
        out.push_back(std::move(entry));
    }
    return out;
}

}  // namespace peaklab
