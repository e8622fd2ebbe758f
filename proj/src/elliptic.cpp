#include "peaklab/elliptic.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseCholesky>

#include "peaklab/eigensolver.hpp"
#include "peaklab/fem.hpp"
#include "peaklab/parallel.hpp"
#include "peaklab/transfer.hpp"

namespace peaklab {

// --------------------------------------------------------- CoefficientSpec

double CoefficientSpec::effective_ellipticity() const { return alpha0 - eps0 * C0 / (1.0 - eps0); }

void CoefficientSpec::validate(const Profile& p, int grid) const {
    require(eps0 > 0.0 && eps0 < 1.0, "coefficients: eps0 must lie in (0, 1)");
    require(C0 > 0.0, "coefficients: C0 must be positive");
    require(alpha0 > 0.0, "coefficients: alpha0 must be positive");
    for (const auto& term : higher_terms) {
        require(term.k >= 1, "coefficients: higher terms need k >= 1");
    }
    double sup = 0.0;
    for (int i = 0; i <= grid; ++i) {
        const double x = static_cast<double>(i) / grid;
        const double a = p(x);
        require(A01(x) > 0.0, "coefficients: A01 must be strictly positive");
        for (int j = 0; j <= 8; ++j) {
            const double y = a * (-1.0 + 2.0 * j / 8.0);
            require(A03(x, y) > 0.0, "coefficients: A03 must be strictly positive");
            require(std::min(A01(x), A03(x, y)) >= alpha0 - 1e-12,
                    "coefficients: alpha0 exceeds the smallest leading-order entry");
            for (const auto& term : higher_terms) {
                // ||A_k||_2 of the 2x2 block
                const double l = term.longitudinal(x, y), m = term.mixed(x, y), t = term.transverse(x, y);
                const double mean = 0.5 * (l + t);
                const double rad = std::sqrt(0.25 * (l - t) * (l - t) + m * m);
                sup = std::max(sup, std::abs(mean) + rad);
            }
        }
    }
    if (sup > C0 + 1e-12) {
        std::ostringstream os;
        os << "coefficients: declared C0 = " << C0 << " is below the sampled higher-term bound " << sup;
        throw ValidationError(os.str());
    }
    if (!(effective_ellipticity() > 0.0)) {
        throw ValidationError("coefficients: effective ellipticity alpha0 - eps0 C0/(1 - eps0) is not positive");
    }
}

std::array<double, 3> CoefficientSpec::matrix(double x, double y, double eps) const {
    double axx = A01(x);
    double axy = 0.0;
    double ayy = A03(x, y);
    for (const auto& term : higher_terms) {
        if (term.k > k_max) continue;
        const double w = std::pow(eps, term.k);
        axx += w * term.longitudinal(x, y);
        axy += w * term.mixed(x, y);
        ayy += w * term.transverse(x, y);
    }
    return {axx, axy, ayy};
}

// ------------------------------------------------------------ OperatorPair

bool OperatorPair::matches(const Field& f) const {
    if (f.on_omega() != on_omega()) return false;
    if (on_omega()) {
        return std::get<std::shared_ptr<const ThinMesh>>(mesh) == f.thin_mesh() && eps == f.eps();
    }
    return std::get<std::shared_ptr<const IntervalMesh>>(mesh) == f.interval_mesh();
}

OperatorPair assemble_limit(const Profile& p, const CoefficientSpec& coeff, std::shared_ptr<const IntervalMesh> mesh) {
    const int n = mesh->size();
    std::vector<Triplet> kt, mt;
    kt.reserve(4 * mesh->elements());
    mt.reserve(4 * mesh->elements());
    const auto& xs = mesh->nodes();
    for (int e = 0; e < mesh->elements(); ++e) {
        const double h = mesh->element_length(e);
        double k_loc[2][2] = {{0, 0}, {0, 0}};
        double m_loc[2][2] = {{0, 0}, {0, 0}};
        for (std::size_t q = 0; q < mesh->gauss_points().size(); ++q) {
            const double xi = mesh->gauss_points()[q];
            const double x = xs[e] + h * xi;
            const double w = mesh->gauss_weights()[q] * h * p.weight(x);
            const double a01 = coeff.A01(x);
            if (!(a01 > 0.0)) {
                std::ostringstream os;
                os << "assemble_limit: non-positive A01 = " << a01 << " at x = " << x;
                throw ValidationError(os.str());
            }
            const double phi[2] = {1.0 - xi, xi};
            const double dphi[2] = {-1.0 / h, 1.0 / h};
            for (int i = 0; i < 2; ++i) {
                for (int j = 0; j < 2; ++j) {
                    k_loc[i][j] += w * a01 * dphi[i] * dphi[j];
                    m_loc[i][j] += w * phi[i] * phi[j];
                }
            }
        }
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) {
                kt.emplace_back(e + i, e + j, k_loc[i][j]);
                mt.emplace_back(e + i, e + j, m_loc[i][j]);
            }
        }
    }
    OperatorPair op;
    op.stiffness.resize(n, n);
    op.mass.resize(n, n);
    op.stiffness.setFromTriplets(kt.begin(), kt.end());
    op.mass.setFromTriplets(mt.begin(), mt.end());
    op.lumped_mass = op.mass * Vector::Ones(n);
    op.mesh = std::move(mesh);
    op.eps = 0.0;
    return op;
}

OperatorPair assemble_thin(const Profile& p, const CoefficientSpec& coeff, std::shared_ptr<const ThinMesh> mesh,
                           double eps) {
    (void)p;
    require(eps > 0.0, "assemble_thin: eps must be positive");
    if (eps > coeff.eps0 + 1e-15) {
        std::ostringstream os;
        os << "assemble_thin: eps = " << eps << " exceeds eps0 = " << coeff.eps0;
        throw ValidationError(os.str());
    }
    const int n = mesh->size();
    std::vector<Triplet> kt;
    kt.reserve(9 * mesh->triangles().size());
    const auto& rule = fem::triangle_rule();
    for (int t = 0; t < static_cast<int>(mesh->triangles().size()); ++t) {
        const auto& tri = mesh->triangles()[t];
        const auto g = fem::triangle_geometry(*mesh, t);
        double axx = 0.0, axy = 0.0, ayy = 0.0;
        for (const auto& qp : rule) {
            double x = 0.0, y = 0.0;
            for (int i = 0; i < 3; ++i) {
                x += qp.bary[i] * mesh->vertices()[tri[i]].x;
                y += qp.bary[i] * mesh->vertices()[tri[i]].y;
            }
            const auto A = coeff.matrix(x, y, eps);
            const double det = A[0] * A[2] - A[1] * A[1];
            if (!(A[0] > 0.0 && det > 0.0)) {
                std::ostringstream os;
                os << "assemble_thin: A^eps not positive definite at (" << x << ", " << y << ") for eps = " << eps;
                throw ValidationError(os.str());
            }
            axx += qp.weight * A[0];
            axy += qp.weight * A[1];
            ayy += qp.weight * A[2];
        }
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                const double v = axx * g.dx[i] * g.dx[j] + axy * (g.dx[i] * g.dy[j] + g.dy[i] * g.dx[j]) / eps +
                                 ayy * g.dy[i] * g.dy[j] / (eps * eps);
                kt.emplace_back(tri[i], tri[j], g.area * v);
            }
        }
    }
    OperatorPair op;
    op.stiffness.resize(n, n);
    op.stiffness.setFromTriplets(kt.begin(), kt.end());
    op.mass = fem::thin_mass(*mesh);
    op.lumped_mass = op.mass * Vector::Ones(n);
    op.mesh = std::move(mesh);
    op.eps = eps;
    return op;
}

// ------------------------------------------------------------------- solve

Field solve(const OperatorPair& op, const Field& rhs, double shift, SolveInfo* info) {
    require(op.matches(rhs), "solve: rhs lives on a different mesh or eps than the operator");
    require(shift >= 0.0, "solve: only real shifts >= 0 are supported");
    const SparseMatrix A = op.stiffness + (1.0 + shift) * op.mass;
    const Vector b = op.mass * rhs.values();
    Vector u;
    SolveInfo local;
    Eigen::SimplicialLDLT<SparseMatrix> ldlt(A);
    if (ldlt.info() == Eigen::Success) {
        u = ldlt.solve(b);
    }
    const double bnorm = std::max(b.norm(), 1e-300);
    if (ldlt.info() != Eigen::Success || !u.allFinite() || (A * u - b).norm() > 1e-10 * bnorm) {
        Eigen::ConjugateGradient<SparseMatrix, Eigen::Lower | Eigen::Upper> cg(A);
        cg.setTolerance(1e-10);
        cg.setMaxIterations(20 * A.rows());
        u = cg.solve(b);
        local.iterative_fallback = true;
        if (cg.info() != Eigen::Success || (A * u - b).norm() > 1e-8 * bnorm) {
            const Vector d = A.diagonal();
            std::ostringstream os;
            os << "solve: factorization breakdown; diagonal range [" << d.minCoeff() << ", " << d.maxCoeff()
               << "], ratio " << d.maxCoeff() / std::max(d.minCoeff(), 1e-300);
            throw NumericalError(os.str());
        }
    }
    local.relative_residual = (A * u - b).norm() / bnorm;
    if (info) *info = local;
    return rhs.with_values(std::move(u));
}

EigenSet eigenpairs(const OperatorPair& op, int k) {
    require(k >= 1 && k < op.size(), "eigenpairs: need 1 <= k < dimension");
    const auto ge = smallest_eigenpairs(op.form(), op.mass, k, 0.0);
    EigenSet set;
    set.residuals = ge.residuals;
    Field proto = op.on_omega() ? Field::zeros(std::get<std::shared_ptr<const ThinMesh>>(op.mesh), op.eps)
                                : Field::zeros(std::get<std::shared_ptr<const IntervalMesh>>(op.mesh));
    for (int j = 0; j < k; ++j) {
        set.values.push_back(ge.values[j]);
        Vector v = ge.vectors.col(j);
        // sign convention: largest-magnitude entry positive
        Eigen::Index imax;
        v.cwiseAbs().maxCoeff(&imax);
        if (v[imax] < 0.0) v = -v;
        set.vectors.push_back(proto.with_values(std::move(v)));
    }
    return set;
}

// ------------------------------------------------------ rate experiment

namespace {

double resolvent_distance(const Profile& p, const CoefficientSpec& coeff, const ThinSource& f_eps,
                          const std::shared_ptr<const ThinMesh>& mesh, const OperatorPair& limit_op, double eps) {
    const OperatorPair op = assemble_thin(p, coeff, mesh, eps);
    const Field f = Field::sample(mesh, eps, f_eps);
    const Field u_eps = solve(op, f);
    const Field u0 = solve(limit_op, average(f));
    return norm(u_eps - extend(u0, mesh, eps), NormKind::H1_eps, op);
}

}  // namespace

RateTable resolvent_rate_experiment(const Profile& p, const CoefficientSpec& coeff, const ThinSource& f_eps,
                                              const std::vector<double>& eps_list, const MeshParams& mesh_params,
                                              int jobs) {
    require(eps_list.size() >= 3, "resolvent_rate_experiment: eps_list needs >= 3 entries");
    for (std::size_t i = 1; i < eps_list.size(); ++i) {
        require(eps_list[i] < eps_list[i - 1], "resolvent_rate_experiment: eps_list must be decreasing");
    }
    coeff.validate(p);
    const auto mesh = build_thin_mesh(p, mesh_params.N_x, mesh_params.density, mesh_params.grading);
    const OperatorPair limit_op = assemble_limit(p, coeff, mesh->layers());

    auto distances = parallel_map(static_cast<int>(eps_list.size()), jobs, [&](int i) {
        return resolvent_distance(p, coeff, f_eps, mesh, limit_op, eps_list[i]);
    });

    RateTable result;
    result.name = "resolvent";
    result.norm_kind = "H1_eps";
    result.floor = 1e-12;
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        result.pairs.emplace_back(eps_list[i], distances[i]);
        result.mesh_h.push_back(mesh->max_x_spacing());
    }

    // Richardson-style pre-check at the smallest eps: the same distance on the
    // half-resolution mesh estimates the discretization error.
    const double eps_min = eps_list.back();
    const int coarse_N = std::max(8, mesh_params.N_x / 2);
    const auto coarse = build_thin_mesh(p, coarse_N, mesh_params.density, mesh_params.grading);
    const OperatorPair coarse_limit = assemble_limit(p, coeff, coarse->layers());
    const double d_coarse = resolvent_distance(p, coeff, f_eps, coarse, coarse_limit, eps_min);
    result.discretization_estimate = std::abs(d_coarse - distances.back());
    double smallest_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < distances.size(); ++i) {
        smallest_gap = std::min(smallest_gap, std::abs(distances[i - 1] - distances[i]));
    }
    if (result.discretization_estimate > 0.1 * smallest_gap) {
        result.flags.push_back("discretization_dominance");
    }
    result.finalize();
    return result;
}

WeightedError weighted_error(const Field& u, const Profile& p, const ScalarFn& exact, const ScalarFn& exact_dx) {
    require(u.on_interval(), "weighted_error: needs an interval field");
    const auto& mesh = *u.interval_mesh();
    const Vector& v = u.values();
    double l2 = 0.0, semi = 0.0;
    for (int e = 0; e < mesh.elements(); ++e) {
        const double h = mesh.element_length(e);
        const double slope = (v[e + 1] - v[e]) / h;
        for (std::size_t q = 0; q < mesh.gauss_points().size(); ++q) {
            const double xi = mesh.gauss_points()[q];
            const double x = mesh.nodes()[e] + h * xi;
            const double w = mesh.gauss_weights()[q] * h * p.weight(x);
            const double du = v[e] + xi * (v[e + 1] - v[e]) - exact(x);
            const double ddu = slope - exact_dx(x);
            l2 += w * du * du;
            semi += w * ddu * ddu;
        }
    }
    return {std::sqrt(l2), std::sqrt(l2 + semi)};
}

std::vector<std::pair<double, double>> flux_decay_check(const Field& u0, const Profile& p, int count) {
    const auto& mesh = *u0.interval_mesh();
    std::vector<std::pair<double, double>> out;
    const int m = std::min(count, mesh.elements());
    for (int e = 0; e < m; ++e) {
        const double x = 0.5 * (mesh.nodes()[e] + mesh.nodes()[e + 1]);
        const double slope = (u0.values()[e + 1] - u0.values()[e]) / mesh.element_length(e);
        out.emplace_back(x, p.weight(x) * slope);
    }
    return out;
}

std::pair<double, Field> mean_zero_decomposition(const OperatorPair& limit_op, const Field& u) {
    require(!limit_op.on_omega() && limit_op.matches(u), "mean_zero_decomposition: needs a matching interval field");
    const double total = limit_op.lumped_mass.sum();
    const double mean = limit_op.lumped_mass.dot(u.values()) / total;
    return {mean, u.with_values(u.values().array() - mean)};
}

}  // namespace peaklab
