#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/SparseCholesky>

#include "peaklab/common.hpp"
#include "peaklab/elliptic.hpp"
#include "peaklab/field.hpp"
#include "peaklab/rate_fit.hpp"

namespace peaklab {

/// Reaction term f with derivatives and primitive F(s) = int_0^s f.
struct Nonlinearity {
    ScalarFn f;
    ScalarFn df;
    ScalarFn d2f;
    ScalarFn primitive;
    double gamma = 1.0;
    double m_f = 1.0;
    std::string family = "custom";
    double parameter = 0.0;

    /// f(s) = lambda s - s^3, m_f = sqrt(lambda) (1 when lambda <= 0).
    static Nonlinearity cubic(double lambda);
    static Nonlinearity zero();
    /// Same family at a new parameter value; only parameterized families.
    Nonlinearity with_parameter(double value) const;

    /// Constant states s with L s = f(s), i.e. s = f(s), in [-range, range].
    std::vector<double> constant_equilibria(double range = 50.0) const;
};

struct NonlinearityReport {
    double growth_constant = 0.0;  ///< fitted C in |f'(s)| <= C (1 + |s|^{gamma-1})
    double observed_m_f = 0.0;     ///< largest sampled |s| with f(s) s > 0
    double m_f = 0.0;
};

/// Samples s in [-50, 50]. Throws ValidationError on a dissipativity violation
/// at |s| >= m_f, or when the cubic family's m_f differs from sqrt(lambda).
NonlinearityReport validate_nonlinearity(const Nonlinearity& nl, int samples = 20001);

/// Mass-lumped IMEX Euler:
///   (M_L + dt (K + M_L)) u+ = M_L (u + dt f(u)),
/// with f applied nodally. The factorization is built once per (operator, dt).
class ImexStepper {
public:
    ImexStepper(const OperatorPair& op, Nonlinearity nl, double dt);

    double dt() const { return dt_; }
    Field step(const Field& u) const;
    /// Throws if dt differs from the factorized step.
    Field step(const Field& u, double dt) const;
    Vector step_values(const Vector& u) const;

private:
    Vector lumped_;
    Nonlinearity nl_;
    double dt_;
    std::shared_ptr<Eigen::SimplicialLDLT<SparseMatrix>> solver_;
};

Field step_imex(const OperatorPair& op, const Nonlinearity& nl, const Field& u, double dt);

/// Discrete Lyapunov functional 1/2 u^T K u + sum_i m_i (u_i^2 / 2 - F(u_i)),
/// lumped masses m_i. On the interval this is int a^n (A01 u_x^2/2 + u^2/2 - F(u)).
double energy(const Field& u, const OperatorPair& op, const Nonlinearity& nl);

struct Trajectory {
    std::vector<double> times;
    std::vector<Field> states;
    std::vector<double> norm_x0;    ///< L2 or L2_a
    std::vector<double> norm_x12;   ///< H1_eps or H1_a
    std::vector<double> linf;
    std::vector<double> energy;     ///< interval side only
    double max_energy_increase = 0.0;  ///< max over steps of (Phi_{k+1} - Phi_k) / (1 + |Phi_k|)
    bool interval_side = true;
};

/// Repeated IMEX steps to time T, recording every `snapshot_every`-th state.
/// Aborts with NumericalError if any nodal value exceeds 1e6.
Trajectory evolve(const OperatorPair& op, const Nonlinearity& nl, const Field& u0, double T, double dt,
                  int snapshot_every = 1);

struct SemigroupRateResult {
    RateTable x0;   ///< alpha = 0
    RateTable x12;  ///< alpha = 1/2
};

struct SemigroupRateOptions {
    double t_star = 1.0;
    double dt = 0.0;  ///< 0 selects t_star / 2000
    MeshParams mesh;
    int jobs = 1;
};

/// d(eps) = || T_eps(t*) E u0 - E T_0(t*) u0 || in X^0 and X^{1/2}.
SemigroupRateResult semigroup_rate_experiment(const Profile& p, const CoefficientSpec& coeff,
                                              const Nonlinearity& nl, const ScalarFn& u0,
                                              const std::vector<double>& eps_list,
                                              const SemigroupRateOptions& options);

}  // namespace peaklab
