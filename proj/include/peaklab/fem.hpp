#pragma once

// P1 building blocks shared by the transfer and elliptic modules.

#include <array>

#include "peaklab/common.hpp"
#include "peaklab/geometry.hpp"

namespace peaklab::fem {

struct TriangleGeometry {
    double area;
    std::array<double, 3> dx;  ///< d phi_i / dx
    std::array<double, 3> dy;  ///< d phi_i / dy
};

TriangleGeometry triangle_geometry(const ThinMesh& mesh, int t);

/// Degree-4 symmetric rule on the reference triangle, barycentric points,
/// weights summing to 1.
struct TrianglePoint {
    std::array<double, 3> bary;
    double weight;
};
const std::array<TrianglePoint, 6>& triangle_rule();

SparseMatrix thin_mass(const ThinMesh& mesh);
/// int d_y u d_y v over Omega.
SparseMatrix thin_transverse_stiffness(const ThinMesh& mesh);

}  // namespace peaklab::fem
