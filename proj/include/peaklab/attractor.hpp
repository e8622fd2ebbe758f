#pragma once

#include <string>
#include <utility>
#include <vector>

#include "peaklab/dynamics.hpp"
#include "peaklab/equilibria.hpp"
#include "peaklab/transfer.hpp"

namespace peaklab {

/// Unstable eigenspace of the linearization at an equilibrium, orthonormal in
/// the lumped mass. Coordinates are reported in max-norm units, c_i = v_i ||phi_i||_inf,
/// so that a limit direction and its extension carry the same coordinates.
struct SpectralProjection {
    std::vector<Field> basis;
    std::vector<double> eigenvalues;  ///< all negative
    Vector lumped_mass;
    int rank = 0;

    /// Mass-orthonormal coordinates v_i = <u, phi_i>_M.
    Vector coordinates(const Field& u) const;
    /// Sum_i v_i phi_i.
    Field apply(const Field& u) const;
    /// phi_i / ||phi_i||_inf.
    Field unit_direction(int i) const;
    /// Flips basis signs so that <phi_i, E ref_i>_M > 0. Ranks must agree.
    void align_to(const SpectralProjection& reference);
};

/// Throws ValidationError when k_max is below the Morse index or e is not hyperbolic.
SpectralProjection spectral_projection(const Equilibrium& e, const OperatorPair& op, int k_max = 8);

/// max_i || psi_eps,i - E psi_0,i ||_{H1_eps} for aligned, max-normalized bases.
double projection_distance(const SpectralProjection& eps_side, const SpectralProjection& limit_side,
                           const OperatorPair& thin_op);

struct Ray {
    std::vector<double> seed_coords;  ///< unit coordinates of the seed direction
    double amplitude = 0.0;           ///< L-inf size of the seed perturbation
    int family = 0;                   ///< direction/sign or angle index
    Trajectory path;
    int exit_index = -1;  ///< first snapshot outside the R_loc ball, -1 if never
    bool complete = false;
    double end_time = 0.0;
};

struct GraphPoint {
    Vector coords;  ///< v-coordinates in max-norm units
    Field w;        ///< u - u* - v-part
};

struct ManifoldOptions {
    std::vector<double> amplitudes = {1e-3, 2e-3, 4e-3};
    double R_loc = 0.5;   ///< L-inf radius of the local ball
    double dt = 1e-3;
    double T_max = 40.0;
    int angles = 16;      ///< rays per rank-2 space (even)
    double end_tol = 1e-6;  ///< L-inf distance to a sink that ends a ray
    int jobs = 1;
};

/// Rays grouped by family; the smallest amplitude of each family is the
/// principal ray, whose local part feeds graph_points.
struct ManifoldSample {
    Equilibrium anchor;
    SpectralProjection projection;
    std::vector<Ray> rays;
    std::vector<std::vector<GraphPoint>> graph_points;  ///< per family
    ManifoldOptions options;
    bool incomplete = false;

    int families() const { return static_cast<int>(graph_points.size()); }
    const Ray& principal(int family) const;
};

/// Forward-integrates u* + a d for every unstable direction d (signs for rank 1,
/// angles for rank 2) until the state is within end_tol of one of `sinks`, or
/// stationary when `sinks` is empty. Rays not finished by T_max are flagged.
ManifoldSample sample_unstable_manifold(const Equilibrium& e, const SpectralProjection& proj, const OperatorPair& op,
                                        const Nonlinearity& nl, const std::vector<Field>& sinks,
                                        const ManifoldOptions& options = {});

/// Max over a shared radial grid of || w_eps(r) - E w_0(r) || per family,
/// where r = |coords| along the principal rays inside the R_loc ball.
double graph_compare(const ManifoldSample& eps_side, const ManifoldSample& limit_side, const OperatorPair& thin_op,
                     NormKind kind = NormKind::H1_eps, int grid = 32);

struct SamplePoint {
    Field state;
    std::string provenance;  ///< "equilibrium" or "ray"
    int source = 0;          ///< atlas index
    int ray = -1;
    double t = 0.0;
};

struct AttractorOptions {
    ManifoldOptions manifold;
    int point_budget = 2000;
    double alpha = 0.5;  ///< distances in X^alpha of the sample's own space
};

struct AttractorSample {
    std::vector<SamplePoint> points;
    std::string space_tag;  ///< "interval" or "omega(eps)"
    NormKind kind = NormKind::H1_a;
    double sampling_density = 0.0;  ///< max gap between consecutive retained ray points
    /// Point indices per ray: anchor, retained ray points, sink.
    std::vector<std::vector<int>> chains;
    int equilibria = 0;
    int rays = 0;
    bool incomplete = false;
    std::vector<std::string> flags;
};

/// Equilibria plus the principal rays of every unstable manifold, subsampled
/// by arc length to at most point_budget points.
AttractorSample assemble_attractor(const EquilibriumAtlas& atlas, const OperatorPair& op, const Nonlinearity& nl,
                                   const AttractorOptions& options,
                                   const std::vector<SpectralProjection>* aligned = nullptr);

/// Max gap along the chains, measured in `kind` on `op`'s space (interval
/// samples are extended when `op` lives on Omega).
double sampling_density(const AttractorSample& A, NormKind kind, const OperatorPair& op);

/// (dist(A, B), dist(B, A)). `op` supplies the norm on A's space; interval
/// points of B are extended when A lives on Omega.
std::pair<double, double> hausdorff_distance(const AttractorSample& A, const AttractorSample& B, NormKind kind,
                                             const OperatorPair& op, int jobs = 1);

struct AttractionCheck {
    std::vector<std::pair<double, double>> series;  ///< (t, max over B of dist(T(t) b, A)), t >= 1
    double exponent = 0.0;  ///< fitted -d log dist / dt on the tail
    bool convex_tail = true;
};

AttractionCheck exponential_attraction_check(const OperatorPair& op, const Nonlinearity& nl,
                                             const AttractorSample& attractor, const std::vector<Field>& B, double T,
                                             double dt = 1e-3, double norm_cap = 100.0);

struct AttractorRateOptions {
    AttractorOptions attractor;
    MeshParams mesh;
    SeedStrategy strategy = SeedStrategy::lambda_continuation;
    NewtonOptions newton;
    double isolation_radius = 0.3;
    int jobs = 1;
};

struct AttractorRateResult {
    RateTable table;
    std::vector<double> sampling_floor;  ///< per eps: max of the two samples' densities
    std::vector<std::pair<double, double>> semi_distances;
    int limit_equilibria = 0;
    int limit_points = 0;
};

/// d(eps) = dist(A_eps, E A_0) + dist(E A_0, A_eps) in H1_eps.
AttractorRateResult attractor_rate_experiment(const Profile& p, const CoefficientSpec& coeff, const Nonlinearity& nl,
                                              const std::vector<double>& eps_list,
                                              const AttractorRateOptions& options);

}  // namespace peaklab
