#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "peaklab/common.hpp"
#include "peaklab/field.hpp"
#include "peaklab/geometry.hpp"
#include "peaklab/rate_fit.hpp"

namespace peaklab {

using ScalarFn2 = std::function<double(double, double)>;

/// eps^k correction block of the diffusion matrix: longitudinal A_k1,
/// mixed A_k2 and transverse A_k3 entries (n = 1, so all are scalars).
struct HigherTerm {
    int k = 1;
    ScalarFn2 longitudinal = [](double, double) { return 0.0; };
    ScalarFn2 mixed = [](double, double) { return 0.0; };
    ScalarFn2 transverse = [](double, double) { return 0.0; };
};

struct CoefficientSpec {
    ScalarFn A01 = [](double) { return 1.0; };
    ScalarFn2 A03 = [](double, double) { return 1.0; };
    std::vector<HigherTerm> higher_terms;
    double C0 = 0.1;
    double alpha0 = 1.0;
    double eps0 = 0.25;
    int k_max = 3;

    /// alpha0 - eps0 C0 / (1 - eps0).
    double effective_ellipticity() const;
    /// Checks C0 against sampled higher-term entries, eps0 < 1 and positivity
    /// of the effective ellipticity. Throws ValidationError.
    void validate(const Profile& p, int grid = 64) const;

    /// A^eps(x, y) as the symmetric 2x2 matrix [[axx, axy], [axy, ayy]]
    /// acting on the unscaled gradient pair (d_x, d_y / eps).
    std::array<double, 3> matrix(double x, double y, double eps) const;
};

/// Assembled P1 form pair. `stiffness` is the diffusion part only, so the
/// operator L corresponds to stiffness + mass.
struct OperatorPair {
    SparseMatrix stiffness;
    SparseMatrix mass;
    Vector lumped_mass;  ///< row sums of `mass`
    MeshRef mesh;
    double eps = 0.0;  ///< > 0 on Omega

    bool on_omega() const { return std::holds_alternative<std::shared_ptr<const ThinMesh>>(mesh); }
    int size() const { return static_cast<int>(stiffness.rows()); }
    SparseMatrix form() const { return stiffness + mass; }
    bool matches(const Field& f) const;
};

OperatorPair assemble_limit(const Profile& p, const CoefficientSpec& coeff,
                            std::shared_ptr<const IntervalMesh> mesh);
OperatorPair assemble_thin(const Profile& p, const CoefficientSpec& coeff,
                           std::shared_ptr<const ThinMesh> mesh, double eps);

struct SolveInfo {
    double relative_residual = 0.0;
    bool iterative_fallback = false;
};

/// Solves (K + (1 + shift) M) u = M rhs.
Field solve(const OperatorPair& op, const Field& rhs, double shift = 0.0, SolveInfo* info = nullptr);

struct EigenSet {
    std::vector<double> values;
    std::vector<Field> vectors;  ///< mass-orthonormal
    std::vector<double> residuals;
};

/// k smallest eigenpairs of (K + M) v = lambda M v, consistent mass.
EigenSet eigenpairs(const OperatorPair& op, int k);

struct MeshParams {
    int N_x = 48;
    double density = 1.0;
    double grading = 1.5;
};

using ThinSource = std::function<double(double x, double y)>;

/// d(eps) = || L_eps^{-1} f - E L_0^{-1} M f ||_{H1_eps} over eps_list. A
/// half-resolution rerun at the smallest eps estimates the discretization
/// error; the table is flagged "discretization_dominance" when that estimate
/// exceeds 10% of the smallest gap between consecutive distances.
RateTable resolvent_rate_experiment(const Profile& p, const CoefficientSpec& coeff,
                                              const ThinSource& f_eps, const std::vector<double>& eps_list,
                                              const MeshParams& mesh_params, int jobs = 1);

struct WeightedError {
    double l2 = 0.0;  ///< || u_h - u ||_{L2_a}
    double h1 = 0.0;  ///< || u_h - u ||_{H1_a}, with A01 = 1
};

/// Error of an interval field against an exact solution, by element quadrature.
WeightedError weighted_error(const Field& u, const Profile& p, const ScalarFn& exact, const ScalarFn& exact_dx);

/// (x, a^n(x) u_x) at midpoints of the first `count` elements.
std::vector<std::pair<double, double>> flux_decay_check(const Field& u0, const Profile& p, int count = 10);

/// Splits an interval field into its a^n-weighted mean and a mean-zero part.
std::pair<double, Field> mean_zero_decomposition(const OperatorPair& limit_op, const Field& u);

}  // namespace peaklab
