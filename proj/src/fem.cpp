#include "peaklab/fem.hpp"

#include <vector>

namespace peaklab::fem {

TriangleGeometry triangle_geometry(const ThinMesh& mesh, int t) {
    const auto& tri = mesh.triangles()[t];
    const auto& p0 = mesh.vertices()[tri[0]];
    const auto& p1 = mesh.vertices()[tri[1]];
    const auto& p2 = mesh.vertices()[tri[2]];
    const double det = (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
    TriangleGeometry g;
    g.area = 0.5 * det;
    g.dx = {(p1.y - p2.y) / det, (p2.y - p0.y) / det, (p0.y - p1.y) / det};
    g.dy = {(p2.x - p1.x) / det, (p0.x - p2.x) / det, (p1.x - p0.x) / det};
    return g;
}

const std::array<TrianglePoint, 6>& triangle_rule() {
    // Dunavant degree 4.
    static const std::array<TrianglePoint, 6> rule = [] {
        const double a1 = 0.445948490915965, b1 = 1.0 - 2.0 * a1, w1 = 0.223381589678011;
        const double a2 = 0.091576213509771, b2 = 1.0 - 2.0 * a2, w2 = 0.109951743655322;
        return std::array<TrianglePoint, 6>{{
            {{a1, a1, b1}, w1},
            {{a1, b1, a1}, w1},
            {{b1, a1, a1}, w1},
            {{a2, a2, b2}, w2},
            {{a2, b2, a2}, w2},
            {{b2, a2, a2}, w2},
        }};
    }();
    return rule;
}

SparseMatrix thin_mass(const ThinMesh& mesh) {
    std::vector<Triplet> trips;
    trips.reserve(mesh.triangles().size() * 9);
    for (int t = 0; t < static_cast<int>(mesh.triangles().size()); ++t) {
        const auto& tri = mesh.triangles()[t];
        const double area = mesh.signed_area(t);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                trips.emplace_back(tri[i], tri[j], area / 12.0 * (i == j ? 2.0 : 1.0));
            }
        }
    }
    SparseMatrix M(mesh.size(), mesh.size());
    M.setFromTriplets(trips.begin(), trips.end());
    return M;
}

SparseMatrix thin_transverse_stiffness(const ThinMesh& mesh) {
    std::vector<Triplet> trips;
    trips.reserve(mesh.triangles().size() * 9);
    for (int t = 0; t < static_cast<int>(mesh.triangles().size()); ++t) {
        const auto& tri = mesh.triangles()[t];
        const auto g = triangle_geometry(mesh, t);
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                trips.emplace_back(tri[i], tri[j], g.area * g.dy[i] * g.dy[j]);
            }
        }
    }
    SparseMatrix K(mesh.size(), mesh.size());
    K.setFromTriplets(trips.begin(), trips.end());
    return K;
}

}  // namespace peaklab::fem
