#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "peaklab/attractor.hpp"
#include "peaklab/dynamics.hpp"
#include "peaklab/elliptic.hpp"
#include "peaklab/equilibria.hpp"
#include "peaklab/geometry.hpp"
#include "peaklab/transfer.hpp"

namespace peaklab {

/// u0(x) = offset + amplitude cos(mode pi x).
struct InitialData {
    double offset = 0.0;
    double amplitude = 1.0;
    int mode = 1;
    ScalarFn fn() const;
};

/// f(x, y) = cos(mode pi x) (1 + y_weight y).
struct SourceSpec {
    int mode = 1;
    double y_weight = 1.0;
    ThinSource fn() const;
};

struct TimeParams {
    double t_star = 1.0;
    double dt = 0.0025;
    double T_max = 5.0;
};

struct MeshConfig {
    int N = 256;        ///< interval elements for limit-only runs
    int N_x = 32;       ///< x-layers of the thin mesh
    double grading = 0.0;  ///< 0 selects the profile default
    double density = 1.0;
    MeshParams thin(const Profile& p) const;
};

struct EquilibriaConfig {
    SeedStrategy strategy = SeedStrategy::lambda_continuation;
    int budget = 1000;
    double isolation_radius = 0.3;
    int eigs = 6;  ///< eigenpairs reported by the eigs command
};

struct AttractorConfig {
    int point_budget = 2000;
    double dt = 1e-3;
    double T_max = 40.0;
    int angles = 16;
    double R_loc = 0.5;
    std::vector<double> amplitudes = {1e-3, 2e-3, 4e-3};
    double attraction_T = 5.0;
    std::vector<double> attraction_set = {3.0};  ///< constant initial states
};

/// Parsed, validated experiment description. `canonical` is the normalized
/// JSON that the run hash is computed from.
struct ExperimentConfig {
    Profile profile;
    CoefficientSpec coeff;
    double A01_c0 = 1.0;
    double A01_c1 = 0.0;
    double A12 = 0.0;
    Nonlinearity nonlinearity = Nonlinearity::cubic(5.0);
    MeshConfig mesh;
    std::vector<double> eps_list;
    TimeParams time;
    NormKind norm = NormKind::H1_eps;
    std::uint64_t seed = 0;
    std::string output_dir = "peaklab_out";
    InitialData u0;
    SourceSpec source;
    EquilibriaConfig equilibria;
    AttractorConfig attractor;
    std::vector<std::string> rates = {"resolvent", "semigroup"};
    nlohmann::json canonical;
};

/// Field-level messages are collected and thrown together as one ValidationError.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

std::uint64_t fnv1a64(const std::string& bytes);
std::string hex64(std::uint64_t value);

}  // namespace peaklab
