#pragma once

#include <string>
#include <vector>

#include "peaklab/dynamics.hpp"
#include "peaklab/elliptic.hpp"
#include "peaklab/field.hpp"
#include "peaklab/rate_fit.hpp"

namespace peaklab {

/// Linearization L_bar = L - f'(u*) in the lumped-mass discretization.
struct Equilibrium {
    Field state;
    EigenSet spectrum;  ///< eigenvalues of L_bar, ascending; negative = unstable
    int morse_index = 0;
    bool hyperbolic = false;
    double gap = 0.0;
    double residual = 0.0;  ///< dual-norm residual of (K + M_L) u - M_L f(u)
    int iterations = 0;
    bool converged = false;
    std::string note;

    bool is_constant(double tol = 1e-8) const;
};

struct NewtonOptions {
    int max_iter = 60;
    double tol = 1e-10;
    double gap_tol = 1e-3;
    int spectrum_k = 4;
};

/// Damped Newton on R(u) = (K + M_L) u - M_L f(u). A singular Jacobian is
/// reported in `note` with converged = false; divergence throws NumericalError.
Equilibrium newton_solve(const OperatorPair& op, const Nonlinearity& nl, const Field& guess,
                         const NewtonOptions& options = {});

/// Smallest eigenpairs of (K + M_L - M_L diag f'(u)) v = mu M_L v, extended
/// until the largest reported eigenvalue is positive.
EigenSet linearization_spectrum(const OperatorPair& op, const Nonlinearity& nl, const Field& state, int k = 4);

/// Recomputes spectrum, Morse index, gap and hyperbolicity for a state.
void attach_spectrum(Equilibrium& e, const OperatorPair& op, const Nonlinearity& nl, const NewtonOptions& options);

double hyperbolicity_gap(const Equilibrium& e);

enum class SeedStrategy { constant_seeds, eigenfunction_seeds, lambda_continuation };

SeedStrategy parse_seed_strategy(const std::string& name);

struct EquilibriumAtlas {
    std::vector<Equilibrium> entries;
    int solves = 0;
    bool budget_exhausted = false;
    std::vector<std::string> notes;
};

struct EnumerationOptions {
    NewtonOptions newton;
    int budget = 1000;              ///< Newton solves
    double dedup_tol = 1e-6;        ///< X^{1/2} distance
    int seed_modes = 4;
    std::vector<double> seed_amplitudes = {0.5, 1.5, 3.0};
    double continuation_step = 0.25;
};

/// Entries are sorted by (Morse index, spatial mean) for reproducible output.
EquilibriumAtlas enumerate_equilibria(const OperatorPair& op, const Nonlinearity& nl, SeedStrategy strategy,
                                      const EnumerationOptions& options = {});

struct PairingEntry {
    int limit_index = 0;
    bool constant = false;
    std::vector<double> eps;
    std::vector<double> distance_x12;
    std::vector<double> distance_x0;
    std::vector<bool> unique_in_ball;
    std::vector<int> morse_index;
    RateTable rate;  ///< X^{1/2}; empty fit for constant equilibria
};

struct PairingOptions {
    MeshParams mesh;
    NewtonOptions newton;
    double isolation_radius = 0.3;
    int jobs = 1;
};

/// Pairs every limit equilibrium with its eps-counterpart found by Newton
/// from E u0*, and fits the distance rate for the nonconstant ones. The limit
/// atlas must be fully hyperbolic; building it on the layer mesh of the same
/// MeshParams makes E exact at the nodes.
std::vector<PairingEntry> pair_and_rate(const EquilibriumAtlas& atlas0, const Profile& p, const CoefficientSpec& coeff,
                                        const Nonlinearity& nl, const std::vector<double>& eps_list,
                                        const PairingOptions& options);

}  // namespace peaklab
