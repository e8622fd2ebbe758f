#pragma once

#include <memory>
#include <variant>

#include "peaklab/common.hpp"
#include "peaklab/geometry.hpp"

namespace peaklab {

using MeshRef = std::variant<std::shared_ptr<const IntervalMesh>, std::shared_ptr<const ThinMesh>>;

/// Nodal P1 coefficients on either the interval mesh (limit space X_0) or the
/// thin mesh (X_eps). The eps tag is the one every H1_eps evaluation uses.
class Field {
public:
    Field() = default;
    Field(std::shared_ptr<const IntervalMesh> mesh, Vector values);
    Field(std::shared_ptr<const ThinMesh> mesh, double eps, Vector values);

    static Field zeros(std::shared_ptr<const IntervalMesh> mesh);
    static Field zeros(std::shared_ptr<const ThinMesh> mesh, double eps);
    static Field constant(std::shared_ptr<const IntervalMesh> mesh, double c);
    static Field constant(std::shared_ptr<const ThinMesh> mesh, double eps, double c);

    template <class Fn>
    static Field sample(std::shared_ptr<const IntervalMesh> mesh, Fn&& fn) {
        Vector v(mesh->size());
        for (int i = 0; i < mesh->size(); ++i) v[i] = fn(mesh->nodes()[i]);
        return Field(std::move(mesh), std::move(v));
    }
    template <class Fn>
    static Field sample(std::shared_ptr<const ThinMesh> mesh, double eps, Fn&& fn) {
        Vector v(mesh->size());
        for (int i = 0; i < mesh->size(); ++i) v[i] = fn(mesh->vertices()[i].x, mesh->vertices()[i].y);
        return Field(std::move(mesh), eps, std::move(v));
    }

    bool on_omega() const { return std::holds_alternative<std::shared_ptr<const ThinMesh>>(mesh_); }
    bool on_interval() const { return !on_omega(); }
    double eps() const { return eps_; }

    const Vector& values() const { return values_; }
    Vector& values() { return values_; }
    int size() const { return static_cast<int>(values_.size()); }

    const MeshRef& mesh() const { return mesh_; }
    const std::shared_ptr<const ThinMesh>& thin_mesh() const;
    const std::shared_ptr<const IntervalMesh>& interval_mesh() const;

    /// Same mesh and space tag, new values.
    Field with_values(Vector values) const;
    bool same_space(const Field& other) const;

private:
    MeshRef mesh_;
    double eps_ = 0.0;
    Vector values_;
};

Field operator-(const Field& a, const Field& b);
Field operator+(const Field& a, const Field& b);
Field operator*(double s, const Field& a);

}  // namespace peaklab
