#include <cmath>
#include <random>

#include "doctest.h"
#include "peaklab/eigensolver.hpp"
#include "peaklab/elliptic.hpp"
#include "peaklab/transfer.hpp"

using namespace peaklab;

namespace {

const Profile lin = Profile::power(1.0);

double max_asymmetry(const SparseMatrix& A) {
    const DenseMatrix D(A);
    return (D - D.transpose()).cwiseAbs().maxCoeff();
}

double manufactured_rhs(double x) {
    const double c = std::cos(M_PI * x);
    const double s_over_x = x > 0.0 ? std::sin(M_PI * x) / x : M_PI;
    return M_PI * M_PI * c + M_PI * s_over_x + c;
}

}  // namespace

TEST_CASE("limit assembly") {
    const CoefficientSpec coeff;
    const auto mesh = build_interval_mesh(64, 1.5);
    const OperatorPair op = assemble_limit(lin, coeff, mesh);
    CHECK(op.mass.sum() == doctest::Approx(0.5).epsilon(1e-10));
    CHECK((op.stiffness * Vector::Ones(op.size())).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(max_asymmetry(op.stiffness) <= 1e-12);
    CHECK(max_asymmetry(op.mass) <= 1e-12);

    CoefficientSpec bad;
    bad.A01 = [](double x) { return x - 0.5; };
    CHECK_THROWS_AS(assemble_limit(lin, bad, mesh), ValidationError);
}

TEST_CASE("unweighted P1 entries on a = const") {
    const Profile flat(TabulatedKind{{0.0, 1e-9, 1.0}, {0.0, 1.0, 1.0}}, 1, 1.0, 1.0, 1e-9, 1e9, 0.5);
    const auto mesh = build_interval_mesh(8, 1.0);
    const OperatorPair op = assemble_limit(flat, CoefficientSpec{}, mesh);
    const double h = 1.0 / 8.0;
    CHECK(op.stiffness.coeff(4, 4) == doctest::Approx(2.0 / h).epsilon(1e-6));
    CHECK(op.stiffness.coeff(4, 5) == doctest::Approx(-1.0 / h).epsilon(1e-6));
    CHECK(op.mass.coeff(4, 4) == doctest::Approx(2.0 * h / 3.0).epsilon(1e-6));
    CHECK(op.mass.coeff(4, 5) == doctest::Approx(h / 6.0).epsilon(1e-6));
}

TEST_CASE("thin assembly") {
    const CoefficientSpec coeff;
    const auto mesh = build_thin_mesh(lin, 32, 1.0, 1.5);
    const OperatorPair op = assemble_thin(lin, coeff, mesh, 0.1);
    CHECK(max_asymmetry(op.stiffness) <= 1e-10);
    CHECK(max_asymmetry(op.mass) <= 1e-12);
    CHECK((op.stiffness * Vector::Ones(op.size())).cwiseAbs().maxCoeff() <= 1e-9);
    const Field ex = extend(Field::sample(mesh->layers(), [](double x) { return x; }), mesh, 0.1);
    CHECK(ex.values().dot(op.stiffness * ex.values()) == doctest::Approx(mesh->polygon_area()).epsilon(1e-10));
    CHECK(op.mass.sum() == doctest::Approx(mesh->total_area()).epsilon(1e-12));
    CHECK_THROWS_AS(assemble_thin(lin, coeff, mesh, 0.5), ValidationError);
}

TEST_CASE("coefficient validation") {
    CoefficientSpec coeff;
    coeff.higher_terms.push_back({1, [](double, double) { return 0.0; }, [](double, double) { return 0.1; },
                                  [](double, double) { return 0.0; }});
    CHECK_NOTHROW(coeff.validate(lin));
    coeff.higher_terms.front().mixed = [](double, double) { return 0.5; };
    CHECK_THROWS_AS(coeff.validate(lin), ValidationError);
    CoefficientSpec weak;
    weak.alpha0 = 0.02;
    weak.C0 = 1.0;
    CHECK(weak.effective_ellipticity() < 0.0);
    CHECK_THROWS_AS(weak.validate(lin), ValidationError);
}

TEST_CASE("solve oracles") {
    const CoefficientSpec coeff;
    const auto mesh = build_thin_mesh(lin, 16, 1.0, 1.5);
    const OperatorPair op = assemble_thin(lin, coeff, mesh, 0.1);
    SolveInfo info;
    const Field u = solve(op, Field::constant(mesh, 0.1, 1.0), 0.0, &info);
    CHECK((u.values().array() - 1.0).abs().maxCoeff() <= 1e-10);
    CHECK(info.relative_residual <= 1e-10);
    const Field half = solve(op, Field::constant(mesh, 0.1, 1.0), 1.0);
    CHECK((half.values().array() - 0.5).abs().maxCoeff() <= 1e-10);
    CHECK_THROWS_AS(solve(op, Field::constant(mesh->layers(), 1.0)), ValidationError);
}

TEST_CASE("manufactured solution converges at orders 2 and 1") {
    const CoefficientSpec coeff;
    std::vector<double> hs, l2, h1;
    for (int N : {64, 128, 256, 512}) {
        const auto mesh = build_interval_mesh(N, 1.0);
        const OperatorPair op = assemble_limit(lin, coeff, mesh);
        const Field u = solve(op, Field::sample(mesh, manufactured_rhs));
        const auto err = weighted_error(u, lin, [](double x) { return std::cos(M_PI * x); },
                                        [](double x) { return -M_PI * std::sin(M_PI * x); });
        hs.push_back(1.0 / N);
        l2.push_back(err.l2);
        h1.push_back(err.h1);
    }
    std::vector<std::pair<double, double>> pl2, ph1;
    for (std::size_t i = 0; i < hs.size(); ++i) {
        pl2.emplace_back(hs[i], l2[i]);
        ph1.emplace_back(hs[i], h1[i]);
    }
    CHECK(fit_rate(pl2).slope == doctest::Approx(2.0).epsilon(0.1));
    CHECK(fit_rate(ph1).slope == doctest::Approx(1.0).epsilon(0.2));
}

TEST_CASE("Bessel spectrum of the limit operator") {
    const auto mesh = build_interval_mesh(512, 1.5);
    const OperatorPair op = assemble_limit(lin, CoefficientSpec{}, mesh);
    const EigenSet set = eigenpairs(op, 4);
    CHECK(set.values[0] == doctest::Approx(1.0).epsilon(1e-8));
    const Vector& v0 = set.vectors[0].values();
    CHECK(v0.maxCoeff() - v0.minCoeff() <= 1e-6);
    CHECK(set.values[1] == doctest::Approx(15.681970642).epsilon(0.01));
    CHECK(set.values[2] == doctest::Approx(50.2184563).epsilon(0.02));
    for (double r : set.residuals) CHECK(r <= 1e-8);
    for (std::size_t i = 1; i < set.values.size(); ++i) CHECK(set.values[i] > set.values[i - 1]);
}

TEST_CASE("thin spectrum bounded below by one") {
    const auto mesh = build_thin_mesh(lin, 16, 1.0, 1.5);
    const OperatorPair op = assemble_thin(lin, CoefficientSpec{}, mesh, 0.1);
    const EigenSet set = eigenpairs(op, 3);
    CHECK(set.values[0] >= 1.0 - 1e-8);
    for (std::size_t i = 0; i < set.vectors.size(); ++i) {
        const Vector& v = set.vectors[i].values();
        CHECK(v.dot(op.mass * v) == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("generalized eigen solver on a dense-sized diagonal pencil") {
    const int n = 300;
    std::vector<Triplet> a, b;
    for (int i = 0; i < n; ++i) {
        a.emplace_back(i, i, 1.0 + i);
        b.emplace_back(i, i, 2.0);
    }
    SparseMatrix A(n, n), B(n, n);
    A.setFromTriplets(a.begin(), a.end());
    B.setFromTriplets(b.begin(), b.end());
    const auto ge = smallest_eigenpairs(A, B, 3, 0.0);
    CHECK(ge.values[0] == doctest::Approx(0.5));
    CHECK(ge.values[2] == doctest::Approx(1.5));
    CHECK_THROWS(smallest_eigenpairs(A, B, 3, 2.0));
}

TEST_CASE("resolvent rate for a y-dependent source") {
    const std::vector<double> eps_list = {0.2, 0.1, 0.05, 0.025};
    const ThinSource f = [](double x, double y) { return std::cos(M_PI * x) * (1.0 + y); };
    const RateTable table = resolvent_rate_experiment(lin, CoefficientSpec{}, f, eps_list, MeshParams{32, 1.0, 1.5});
    REQUIRE(table.fit.has_value());
    CHECK(table.fit->slope >= 0.8);
    CHECK(table.fit->slope <= 1.2);
    CHECK(table.fit->r_squared >= 0.98);
}

TEST_CASE("resolvent rate with a mixed higher term") {
    CoefficientSpec coeff;
    coeff.higher_terms.push_back({1, [](double, double) { return 0.0; }, [](double, double) { return 0.1; },
                                  [](double, double) { return 0.0; }});
    const ThinSource f = [](double x, double y) { return std::cos(M_PI * x) * (1.0 + y); };
    const RateTable table = resolvent_rate_experiment(lin, coeff, f, {0.2, 0.1, 0.05, 0.025}, MeshParams{32, 1.0, 1.5});
    REQUIRE(table.fit.has_value());
    CHECK(table.fit->slope >= 0.8);
    CHECK(table.fit->slope <= 1.2);
}

TEST_CASE("y-independent source: distance scales with the slanted boundary only") {
    const ThinSource f = [](double x, double) { return std::cos(M_PI * x); };
    const RateTable table = resolvent_rate_experiment(lin, CoefficientSpec{}, f, {0.2, 0.1, 0.05}, MeshParams{32, 1.0, 1.5});
    for (const auto& [eps, d] : table.pairs) CHECK(d <= 0.5 * eps);
    CHECK_THROWS_AS(resolvent_rate_experiment(lin, CoefficientSpec{}, f, {0.05, 0.1, 0.2}, MeshParams{}),
                    ValidationError);
}

TEST_CASE("rate fit contract") {
    CHECK_THROWS_AS(fit_rate({{0.2, 1.0}, {0.1, 0.5}}), ValidationError);
    const RateFit fit = fit_rate({{0.4, 0.8}, {0.2, 0.4}, {0.1, 0.2}});
    CHECK(fit.slope == doctest::Approx(1.0));
    CHECK(fit.r_squared == doctest::Approx(1.0));
    RateTable t;
    t.pairs = {{0.2, 1e-15}, {0.1, 1e-15}, {0.05, 1e-15}};
    t.floor = 1e-12;
    t.finalize();
    CHECK(t.flagged("slope_undefined"));
}

TEST_CASE("flux decay and mean-zero decomposition") {
    const CoefficientSpec coeff;
    const auto coarse = build_interval_mesh(64, 1.0);
    const auto fine = build_interval_mesh(128, 1.0);
    for (const auto& [x, flux] : flux_decay_check(Field::constant(coarse, 2.0), lin)) CHECK(flux == 0.0);

    const Profile p15 = Profile::power(1.5);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    std::vector<double> coeffs(5);
    for (auto& c : coeffs) c = unif(rng);
    auto rhs = [&](double x) {
        double s = 0.0;
        for (std::size_t k = 0; k < coeffs.size(); ++k) s += coeffs[k] * std::cos(k * M_PI * x);
        return s;
    };
    const Field uc = solve(assemble_limit(p15, coeff, coarse), Field::sample(coarse, rhs));
    const Field uf = solve(assemble_limit(p15, coeff, fine), Field::sample(fine, rhs));
    const double fc = std::abs(flux_decay_check(uc, p15, 1).front().second);
    const double ff = std::abs(flux_decay_check(uf, p15, 1).front().second);
    CHECK(ff <= 0.5 * fc);

    const OperatorPair op = assemble_limit(lin, coeff, coarse);
    const Field u = Field::sample(coarse, [](double x) { return std::exp(x); });
    const auto [mean, rest] = mean_zero_decomposition(op, u);
    CHECK((rest.values().array() + mean - u.values().array()).abs().maxCoeff() <= 1e-12);
    CHECK(op.lumped_mass.dot(rest.values()) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK((op.stiffness * Vector::Constant(op.size(), mean)).cwiseAbs().maxCoeff() <= 1e-12);
}
