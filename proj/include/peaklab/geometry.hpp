#pragma once

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "peaklab/common.hpp"

namespace peaklab {

// ---------------------------------------------------------------------------
// Profile: the width function a(x) of the cusped domain
//   Omega = {(x, y) : 0 < x < 1, |y| < a(x)}
// together with the constants of the power-law bracket
//   K1 x^alpha1 <= a(x) <= K2 x^alpha2   on (0, x0).
// ---------------------------------------------------------------------------

struct PowerKind {
    double exponent = 1.0;
};

struct ScaledPowerKind {
    double coefficient = 1.0;
    double exponent = 1.0;
};

/// Piecewise-linear interpolation of (x, a) samples; xs strictly increasing.
struct TabulatedKind {
    std::vector<double> xs;
    std::vector<double> values;
};

using ProfileKind = std::variant<PowerKind, ScaledPowerKind, TabulatedKind>;

class Profile {
public:
    Profile() = default;
    Profile(ProfileKind kind, int n, double alpha1, double alpha2, double K1, double K2, double x0);

    /// a(x) = x^p, with bracket constants alpha1 = alpha2 = p, K1 = K2 = 1.
    static Profile power(double exponent, int n = 1);

    const ProfileKind& kind() const { return kind_; }
    int n() const { return n_; }
    double alpha1() const { return alpha1_; }
    double alpha2() const { return alpha2_; }
    double K1() const { return K1_; }
    double K2() const { return K2_; }
    double x0() const { return x0_; }

    /// a(x). Throws ValidationError outside [0, 1] or outside a table's range.
    double operator()(double x) const;
    /// a(x)^n, the weight of the limit problem.
    double weight(double x) const;

    /// Exponent used to pick the default mesh grading; tables report alpha1.
    double leading_exponent() const;

private:
    ProfileKind kind_ = PowerKind{};
    int n_ = 1;
    double alpha1_ = 1.0;
    double alpha2_ = 1.0;
    double K1_ = 1.0;
    double K2_ = 1.0;
    double x0_ = 0.5;
};

double eval_profile(const Profile& p, double x);

/// Default grading exponent: 1.5 for profiles with alpha1 <= 1.5, else 2.
double default_grading(const Profile& p);

using ScalarFn = std::function<double(double)>;

struct HypothesisReport {
    bool h1_ok = false;
    bool h3_ok = false;
    bool h2_finite = false;
    double h2_integral = 0.0;  ///< +inf when the nested quadrature did not converge
    std::vector<std::pair<double, double>> W_samples;
    std::vector<std::string> messages;
};

struct HypothesisOptions {
    int grid_size = 256;
    double tol = 1e-10;
    /// Dyadic refinement levels toward the cusp for the H2 integral.
    int max_levels = 120;
    ScalarFn A01 = [](double) { return 1.0; };
};

/// W(x) = int_x^{1/2} dt / (A01(t) a^n(t)).
double h2_weight_function(const Profile& p, const ScalarFn& A01, double x, double tol = 1e-12);

HypothesisReport check_hypotheses(const Profile& p, const HypothesisOptions& options);
HypothesisReport check_hypotheses(const Profile& p, int grid_size, double tol);

// ---------------------------------------------------------------------------
// Meshes
// ---------------------------------------------------------------------------

/// Partition of [0, 1] with per-element Gauss rule.
class IntervalMesh {
public:
    IntervalMesh(std::vector<double> nodes, double grading_exponent, int quadrature_points = 3);

    const std::vector<double>& nodes() const { return nodes_; }
    int elements() const { return static_cast<int>(nodes_.size()) - 1; }
    int size() const { return static_cast<int>(nodes_.size()); }
    double grading_exponent() const { return grading_; }
    double element_length(int e) const { return nodes_[e + 1] - nodes_[e]; }
    double min_element_length() const;
    double max_element_length() const;

    /// Reference Gauss points on [0, 1] and weights summing to 1.
    const std::vector<double>& gauss_points() const { return gauss_points_; }
    const std::vector<double>& gauss_weights() const { return gauss_weights_; }

    /// Index e with nodes[e] <= x <= nodes[e + 1].
    int locate(double x) const;
    /// P1 interpolation of nodal values at x.
    double interpolate(const Vector& values, double x) const;

private:
    std::vector<double> nodes_;
    double grading_;
    std::vector<double> gauss_points_;
    std::vector<double> gauss_weights_;
};

std::shared_ptr<const IntervalMesh> build_interval_mesh(int N, double grading_exponent,
                                                        int quadrature_points = 3);

enum class BoundaryTag : int { top = 1, bottom = 2, right = 3, left = 4 };

struct BoundaryEdge {
    int a = 0;
    int b = 0;
    BoundaryTag tag = BoundaryTag::top;
};

struct Column {
    double x = 0.0;
    double half_width = 0.0;  ///< a(x) at this layer
    int first_vertex = 0;
    int intervals = 0;  ///< 0 for the degenerate cusp column
    int vertex_count() const { return intervals + 1; }
};

/// Column-structured triangulation of Omega for n = 1. Each x-layer carries an
/// even number of uniform transverse intervals so that y = 0 is a vertex and
/// the triangulation is mirror symmetric in y.
class ThinMesh {
public:
    struct Vertex {
        double x;
        double y;
    };

    const std::vector<Vertex>& vertices() const { return vertices_; }
    const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
    const std::vector<Column>& columns() const { return columns_; }
    const std::vector<BoundaryEdge>& boundary_edges() const { return boundary_; }
    const std::vector<int>& vertex_column() const { return vertex_column_; }
    int size() const { return static_cast<int>(vertices_.size()); }

    /// The interval mesh whose nodes are the x-layers of this mesh.
    std::shared_ptr<const IntervalMesh> layers() const { return layers_; }

    double signed_area(int t) const;
    double total_area() const;
    /// Area of the polygon with vertices (x_i, +-a(x_i)).
    double polygon_area() const;
    double max_x_spacing() const;

private:
    friend std::shared_ptr<const ThinMesh> build_thin_mesh(const Profile&, int, double, double);

    std::vector<Vertex> vertices_;
    std::vector<std::array<int, 3>> triangles_;
    std::vector<Column> columns_;
    std::vector<int> vertex_column_;
    std::vector<BoundaryEdge> boundary_;
    std::shared_ptr<const IntervalMesh> layers_;
};

/// Column at x_i gets max(1, ceil(density * a(x_i) / h_i)) transverse intervals,
/// rounded up to even, where h_i is the local x-spacing. x_i = (i/N_x)^grading.
std::shared_ptr<const ThinMesh> build_thin_mesh(const Profile& p, int N_x, double transverse_density,
                                                double grading_exponent);

}  // namespace peaklab
