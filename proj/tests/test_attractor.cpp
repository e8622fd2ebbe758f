#include <cmath>

#include "doctest.h"
#include "peaklab/attractor.hpp"
#include "peaklab/rate_fit.hpp"

using namespace peaklab;

namespace {

const Profile lin = Profile::power(1.0);

struct Bistable {
    std::shared_ptr<const IntervalMesh> mesh = build_interval_mesh(32, 1.5);
    OperatorPair op = assemble_limit(lin, CoefficientSpec{}, mesh);
    Nonlinearity nl = Nonlinearity::cubic(5.0);
    EquilibriumAtlas atlas = enumerate_equilibria(op, nl, SeedStrategy::constant_seeds);
};

AttractorSample sample_with_budget(const Bistable& s, int budget) {
    AttractorOptions options;
    options.point_budget = budget;
    return assemble_attractor(s.atlas, s.op, s.nl, options);
}

AttractorSample singleton(const Field& f) {
    AttractorSample a;
    a.points.push_back({f, "equilibrium", 0, -1, 0.0});
    a.equilibria = 1;
    return a;
}

}  // namespace

TEST_CASE("spectral projection at the bistable saddle") {
    Bistable s;
    REQUIRE(s.atlas.entries.size() == 3);
    const Equilibrium& zero = s.atlas.entries[2];
    const SpectralProjection p = spectral_projection(zero, s.op);
    CHECK(p.rank == 1);
    CHECK(p.eigenvalues[0] == doctest::Approx(-4.0).epsilon(0.02));
    const Vector& phi = p.basis[0].values();
    CHECK(phi.maxCoeff() - phi.minCoeff() <= 1e-8 * phi.cwiseAbs().maxCoeff());
    CHECK(p.unit_direction(0).values().cwiseAbs().maxCoeff() == doctest::Approx(1.0));

    const Field u = Field::sample(s.mesh, [](double x) { return std::cos(3.0 * x) + x * x; });
    const Field pu = p.apply(u);
    CHECK((p.apply(pu).values() - pu.values()).cwiseAbs().maxCoeff() <= 1e-12);

    for (int i = 0; i < 2; ++i) CHECK(spectral_projection(s.atlas.entries[i], s.op).rank == 0);
    CHECK_THROWS_AS(spectral_projection(zero, s.op, 0), ValidationError);
}

TEST_CASE("unstable manifold of the saddle connects to both sinks") {
    Bistable s;
    const Equilibrium& zero = s.atlas.entries[2];
    const SpectralProjection p = spectral_projection(zero, s.op);
    const std::vector<Field> sinks = {s.atlas.entries[0].state, s.atlas.entries[1].state};
    ManifoldOptions options;
    options.amplitudes = {1e-3};
    const ManifoldSample ms = sample_unstable_manifold(zero, p, s.op, s.nl, sinks, options);
    REQUIRE(ms.families() == 2);
    CHECK_FALSE(ms.incomplete);
    const Field& plus_end = ms.principal(0).path.states.back();
    const Field& minus_end = ms.principal(1).path.states.back();
    CHECK((plus_end.values().array() - 2.0).abs().maxCoeff() <= 1e-4);
    CHECK((minus_end.values().array() + 2.0).abs().maxCoeff() <= 1e-4);
    // the two rays are exact mirror images
    const auto& a = ms.principal(0).path.states;
    const auto& b = ms.principal(1).path.states;
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK((a[i].values() + b[i].values()).cwiseAbs().maxCoeff() <= 1e-12);
    // on the constant line the graph is flat
    for (const auto& g : ms.graph_points[0]) CHECK(g.w.values().cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("assembled attractor respects the point budget") {
    Bistable s;
    const AttractorSample A = sample_with_budget(s, 100);
    CHECK(A.points.size() <= 100);
    CHECK(A.equilibria == 3);
    CHECK(A.rays == 2);
    CHECK(A.space_tag == "interval");
    CHECK(A.kind == NormKind::H1_a);
    CHECK(A.flags.empty());
    CHECK_FALSE(A.incomplete);
    CHECK(A.sampling_density > 0.0);
    CHECK(A.sampling_density < 0.2);
    CHECK(sampling_density(A, A.kind, s.op) == doctest::Approx(A.sampling_density));

    const auto self = hausdorff_distance(A, A, NormKind::H1_a, s.op);
    CHECK(self.first == 0.0);
    CHECK(self.second == 0.0);
}

TEST_CASE("a single stable equilibrium is the whole attractor") {
    Bistable s;
    const Nonlinearity weak = Nonlinearity::cubic(0.5);
    const EquilibriumAtlas atlas = enumerate_equilibria(s.op, weak, SeedStrategy::eigenfunction_seeds);
    const AttractorSample A = assemble_attractor(atlas, s.op, weak, AttractorOptions{});
    CHECK(A.points.size() == 1);
    CHECK(A.rays == 0);
    CHECK(A.sampling_density == 0.0);
}

TEST_CASE("Hausdorff distance oracles") {
    Bistable s;
    const double c = 0.75;
    const auto d = hausdorff_distance(singleton(Field::zeros(s.mesh)), singleton(Field::constant(s.mesh, c)),
                                      NormKind::H1_a, s.op);
    // ||1||_{H1_a} = sqrt(int_0^1 x dx)
    CHECK(d.first == doctest::Approx(c * std::sqrt(0.5)).epsilon(1e-12));
    CHECK(d.second == doctest::Approx(d.first));
    const auto inf = hausdorff_distance(singleton(Field::zeros(s.mesh)), singleton(Field::constant(s.mesh, c)),
                                        NormKind::Linf, s.op);
    CHECK(inf.first == doctest::Approx(c));
    CHECK_THROWS_AS(hausdorff_distance(AttractorSample{}, singleton(Field::zeros(s.mesh)), NormKind::H1_a, s.op),
                    ValidationError);
}

TEST_CASE("refined resampling stays within the sampling density") {
    Bistable s;
    const AttractorSample coarse = sample_with_budget(s, 40);
    const AttractorSample fine = sample_with_budget(s, 400);
    const auto d = hausdorff_distance(coarse, fine, NormKind::H1_a, s.op);
    CHECK(d.first <= fine.sampling_density);
    CHECK(d.second <= coarse.sampling_density);
}

TEST_CASE("invariance and symmetry of the sample") {
    Bistable s;
    const AttractorSample A = sample_with_budget(s, 100);
    AttractorSample moved = A;
    AttractorSample mirrored = A;
    const ImexStepper stepper(s.op, s.nl, 1e-3);
    for (std::size_t i = 0; i < A.points.size(); ++i) {
        Vector u = A.points[i].state.values();
        for (int k = 0; k < 1000; ++k) u = stepper.step_values(u);
        moved.points[i].state.values() = u;
        mirrored.points[i].state.values() *= -1.0;
    }
    CHECK(hausdorff_distance(moved, A, NormKind::H1_a, s.op).first <= 2.0 * A.sampling_density);
    const auto sym = hausdorff_distance(mirrored, A, NormKind::H1_a, s.op);
    CHECK(sym.first <= 1e-8);
    CHECK(sym.second <= 1e-8);
}

TEST_CASE("exponential attraction") {
    Bistable s;
    const AttractorSample A = sample_with_budget(s, 100);
    const auto check = exponential_attraction_check(s.op, s.nl, A, {Field::constant(s.mesh, 3.0)}, 4.0);
    CHECK(check.exponent > 0.0);
    CHECK(check.series.front().first == doctest::Approx(1.0));
    CHECK(check.series.back().second < check.series.front().second);

    std::vector<Field> eq;
    for (const auto& e : s.atlas.entries) eq.push_back(e.state);
    const auto still = exponential_attraction_check(s.op, s.nl, A, eq, 2.0);
    for (const auto& [t, d] : still.series) CHECK(d <= 1e-10);
    CHECK_THROWS_AS(exponential_attraction_check(s.op, s.nl, A, {Field::constant(s.mesh, 200.0)}, 2.0),
                    ValidationError);
}

TEST_CASE("rank-2 manifold: mirror seeds and tangency") {
    Bistable s;
    const Nonlinearity nl = Nonlinearity::cubic(20.0);
    NewtonOptions newton;
    const Equilibrium zero = newton_solve(s.op, nl, Field::zeros(s.mesh), newton);
    REQUIRE(zero.morse_index == 2);
    const SpectralProjection p = spectral_projection(zero, s.op);
    ManifoldOptions options;
    options.amplitudes = {1e-3};
    options.angles = 8;
    options.T_max = 1.5;
    const ManifoldSample ms = sample_unstable_manifold(zero, p, s.op, nl, {}, options);
    REQUIRE(ms.families() == 8);
    for (int k = 0; k < 4; ++k) {
        const auto& a = ms.principal(k).path.states;
        const auto& b = ms.principal(k + 4).path.states;
        REQUIRE(a.size() == b.size());
        CHECK((a.back().values() + b.back().values()).cwiseAbs().maxCoeff() <= 1e-10);
    }
    // w = O(r^2): a bound on every family, a fitted order along the eigen-axes
    int checked = 0;
    for (int f = 0; f < ms.families(); ++f) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& g : ms.graph_points[f]) {
            const double r = g.coords.norm();
            const double w = norm(g.w, NormKind::H1_a, s.op);
            CHECK(w <= r * r);
            if (r < 0.1 && w > 1e-13) pts.emplace_back(r, w);
        }
        const auto& seed = ms.principal(f).seed_coords;
        const bool on_axis = std::abs(seed[0]) < 1e-12 || std::abs(seed[1]) < 1e-12;
        if (!on_axis || pts.size() < 3) continue;
        CHECK(fit_rate(pts).slope >= 1.8);
        ++checked;
    }
    CHECK(checked > 0);
}

TEST_CASE("projection distance decays with eps") {
    const MeshParams mp{16, 1.0, 1.5};
    const auto mesh = build_thin_mesh(lin, mp.N_x, mp.density, mp.grading);
    const OperatorPair limit = assemble_limit(lin, CoefficientSpec{}, mesh->layers());
    const Nonlinearity nl = Nonlinearity::cubic(20.0);
    const Equilibrium e0 = newton_solve(limit, nl, Field::zeros(mesh->layers()));
    REQUIRE(e0.morse_index == 2);
    const SpectralProjection p0 = spectral_projection(e0, limit);
    std::vector<std::pair<double, double>> pairs;
    for (double eps : {0.1, 0.05, 0.025}) {
        const OperatorPair thin = assemble_thin(lin, CoefficientSpec{}, mesh, eps);
        const Equilibrium e = newton_solve(thin, nl, Field::zeros(mesh, eps));
        REQUIRE(e.morse_index == 2);
        SpectralProjection p = spectral_projection(e, thin);
        p.align_to(p0);
        pairs.emplace_back(eps, projection_distance(p, p0, thin));
    }
    const RateFit fit = fit_rate(pairs);
    CHECK(fit.slope >= 0.8);
}

TEST_CASE("graph comparison needs matching ray grids") {
    Bistable s;
    const Equilibrium& zero = s.atlas.entries[2];
    const SpectralProjection p = spectral_projection(zero, s.op);
    ManifoldOptions a;
    a.amplitudes = {1e-3};
    a.T_max = 0.5;
    ManifoldOptions b = a;
    b.amplitudes = {2e-3};
    const auto ma = sample_unstable_manifold(zero, p, s.op, s.nl, {}, a);
    const auto mb = sample_unstable_manifold(zero, p, s.op, s.nl, {}, b);
    CHECK_THROWS_AS(graph_compare(ma, mb, s.op, NormKind::H1_a), ValidationError);
    CHECK(graph_compare(ma, ma, s.op, NormKind::H1_a) == 0.0);
}

TEST_CASE("attractor rate needs three eps values") {
    AttractorRateOptions options;
    options.mesh = MeshParams{16, 1.0, 1.5};
    CHECK_THROWS_AS(attractor_rate_experiment(lin, CoefficientSpec{}, Nonlinearity::cubic(5.0), {0.1, 0.05}, options),
                    ValidationError);
}
