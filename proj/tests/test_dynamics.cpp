#include <cmath>

#include "doctest.h"
#include "peaklab/dynamics.hpp"
#include "peaklab/transfer.hpp"

using namespace peaklab;

namespace {

const Profile lin = Profile::power(1.0);

OperatorPair limit_op(int N = 64) { return assemble_limit(lin, CoefficientSpec{}, build_interval_mesh(N, 1.5)); }

Field interval_field(const OperatorPair& op, const ScalarFn& fn) {
    return Field::sample(std::get<std::shared_ptr<const IntervalMesh>>(op.mesh), fn);
}

}  // namespace

TEST_CASE("nonlinearity validation") {
    const auto report = validate_nonlinearity(Nonlinearity::cubic(5.0));
    CHECK(report.m_f == doctest::Approx(std::sqrt(5.0)));
    CHECK(report.observed_m_f <= std::sqrt(5.0));
    CHECK_NOTHROW(validate_nonlinearity(Nonlinearity::zero()));

    Nonlinearity wrong = Nonlinearity::zero();
    wrong.f = [](double s) { return s * s * s; };
    wrong.df = [](double s) { return 3 * s * s; };
    wrong.gamma = 3.0;
    CHECK_THROWS_AS(validate_nonlinearity(wrong), ValidationError);

    Nonlinearity bad_mf = Nonlinearity::cubic(5.0);
    bad_mf.m_f = 3.0;
    CHECK_THROWS_AS(validate_nonlinearity(bad_mf), ValidationError);

    const auto roots = Nonlinearity::cubic(5.0).constant_equilibria();
    REQUIRE(roots.size() == 3);
    CHECK(roots[0] == doctest::Approx(-2.0));
    CHECK(roots[1] == doctest::Approx(0.0));
    CHECK(roots[2] == doctest::Approx(2.0));
}

TEST_CASE("IMEX step oracles") {
    const OperatorPair op = limit_op();
    const Nonlinearity nl = Nonlinearity::cubic(5.0);
    const Field two = interval_field(op, [](double) { return 2.0; });
    CHECK((step_imex(op, nl, two, 0.01).values().array() - 2.0).abs().maxCoeff() <= 1e-12);

    const double dt = 0.1;
    const Field one = interval_field(op, [](double) { return 1.0; });
    const Field next = step_imex(op, Nonlinearity::zero(), one, dt);
    CHECK((next.values().array() - 1.0 / (1.0 + dt)).abs().maxCoeff() <= 1e-12);

    const ImexStepper stepper(op, nl, dt);
    CHECK_THROWS_AS(stepper.step(one, 0.05), ValidationError);
    CHECK_THROWS_AS(ImexStepper(op, nl, 0.0), ValidationError);
}

TEST_CASE("IMEX first-order consistency") {
    const auto mesh = build_interval_mesh(32, 1.0);
    const OperatorPair op = assemble_limit(lin, CoefficientSpec{}, mesh);
    const Nonlinearity nl = Nonlinearity::cubic(2.0);
    const Field u = Field::sample(mesh, [](double x) { return 0.3 * std::cos(M_PI * x); });
    // discrete generator: M_L^{-1} (-(K + M_L) u + M_L f(u))
    Vector fu(u.size());
    for (int i = 0; i < u.size(); ++i) fu[i] = nl.f(u.values()[i]);
    const Vector gen = (-(op.stiffness * u.values())).cwiseQuotient(op.lumped_mass) - u.values() + fu;
    double previous = 0.0;
    for (double dt : {1e-5, 5e-6, 2.5e-6}) {
        const Vector diff = (step_imex(op, nl, u, dt).values() - u.values()) / dt - gen;
        const double err = diff.cwiseAbs().maxCoeff();
        if (previous > 0.0) CHECK(err <= 0.55 * previous);
        previous = err;
    }
}

TEST_CASE("energy oracles") {
    const OperatorPair op = limit_op();
    const Nonlinearity nl = Nonlinearity::cubic(5.0);
    CHECK(energy(interval_field(op, [](double) { return 0.0; }), op, nl) == 0.0);
    CHECK(energy(interval_field(op, [](double) { return 2.0; }), op, nl) == doctest::Approx(-2.0).epsilon(1e-10));
}

TEST_CASE("evolve toward the stable constant") {
    const OperatorPair op = limit_op();
    const Nonlinearity nl = Nonlinearity::cubic(5.0);
    const Trajectory traj = evolve(op, nl, interval_field(op, [](double) { return 3.0; }), 20.0, 0.01, 100);
    CHECK((traj.states.back().values().array() - 2.0).abs().maxCoeff() <= 1e-6);
    for (std::size_t i = 1; i < traj.linf.size(); ++i) CHECK(traj.linf[i] <= traj.linf[i - 1] + 1e-12);
    for (std::size_t i = 1; i < traj.times.size(); ++i) CHECK(traj.times[i] > traj.times[i - 1]);

    const Trajectory zero = evolve(op, nl, interval_field(op, [](double) { return 0.0; }), 1.0, 0.01);
    CHECK(zero.states.back().values().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("energy decreases and the absorbing ball is entered") {
    const OperatorPair op = limit_op();
    const Nonlinearity nl = Nonlinearity::cubic(5.0);
    const double bound = std::sqrt(5.0) * 1.05;
    for (int k = 0; k < 4; ++k) {
        const Field u0 = interval_field(op, [k](double x) { return 10.0 * std::cos((k + 1) * M_PI * x + k); });
        const Trajectory traj = evolve(op, nl, u0, 5.0, 1e-3, 10);
        CHECK(traj.max_energy_increase <= 1e-8);
        bool entered = false;
        for (double v : traj.linf) {
            if (entered) CHECK(v <= bound);
            entered = entered || v <= bound;
            CHECK(v <= 10.0 + 1e-6);
        }
        CHECK(entered);
    }
}

TEST_CASE("semigroup property") {
    const OperatorPair op = limit_op(32);
    const Nonlinearity nl = Nonlinearity::cubic(5.0);
    const Field u0 = interval_field(op, [](double x) { return 0.5 + std::cos(M_PI * x); });
    const Field once = evolve(op, nl, u0, 0.2, 0.01).states.back();
    const Field twice = evolve(op, nl, evolve(op, nl, u0, 0.1, 0.01).states.back(), 0.1, 0.01).states.back();
    CHECK((once.values() - twice.values()).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("commutation with E for y-independent data, f = 0") {
    const MeshParams params{16, 1.0, 1.5};
    const auto mesh = build_thin_mesh(lin, params.N_x, params.density, params.grading);
    const OperatorPair thin = assemble_thin(lin, CoefficientSpec{}, mesh, 0.1);
    const OperatorPair limit = assemble_limit(lin, CoefficientSpec{}, mesh->layers());
    const Field u0 = Field::constant(mesh->layers(), 0.7);
    const Field a = evolve(thin, Nonlinearity::zero(), extend(u0, mesh, 0.1), 1.0, 0.01).states.back();
    const Field b = extend(evolve(limit, Nonlinearity::zero(), u0, 1.0, 0.01).states.back(), mesh, 0.1);
    CHECK((a.values() - b.values()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("semigroup rate: constant data gives zero distance") {
    SemigroupRateOptions options;
    options.mesh = MeshParams{16, 1.0, 1.5};
    options.dt = 0.01;
    const auto result = semigroup_rate_experiment(lin, CoefficientSpec{}, Nonlinearity::zero(),
                                                  [](double) { return 1.0; }, {0.2, 0.1, 0.05}, options);
    for (const auto& [eps, d] : result.x12.pairs) CHECK(d <= 1e-10);
    CHECK(result.x12.flagged("slope_undefined"));
    options.t_star = 0.1;
    CHECK_THROWS_AS(semigroup_rate_experiment(lin, CoefficientSpec{}, Nonlinearity::zero(),
                                              [](double) { return 1.0; }, {0.2, 0.1, 0.05}, options),
                    ValidationError);
}

TEST_CASE("linear semigroup rate") {
    SemigroupRateOptions options;
    options.mesh = MeshParams{32, 1.0, 1.5};
    options.dt = 1.0 / 400.0;
    const auto result = semigroup_rate_experiment(lin, CoefficientSpec{}, Nonlinearity::zero(),
                                                  [](double x) { return std::cos(M_PI * x); },
                                                  {0.1, 0.05, 0.025, 0.0125}, options);
    REQUIRE(result.x12.fit.has_value());
    CHECK(result.x12.fit->slope >= 0.8);
    CHECK(result.x12.fit->slope <= 1.2);
}
