#include "peaklab/transfer.hpp"

#include <cmath>
#include <string>

#include "peaklab/fem.hpp"

namespace peaklab {

// ------------------------------------------------------------------ Field

Field::Field(std::shared_ptr<const IntervalMesh> mesh, Vector values)
    : mesh_(std::move(mesh)), eps_(0.0), values_(std::move(values)) {
    require(values_.size() == interval_mesh()->size(), "field length does not match interval mesh");
}

Field::Field(std::shared_ptr<const ThinMesh> mesh, double eps, Vector values)
    : mesh_(std::move(mesh)), eps_(eps), values_(std::move(values)) {
    require(eps_ > 0.0, "omega field needs eps > 0");
    require(values_.size() == thin_mesh()->size(), "field length does not match thin mesh");
}

Field Field::zeros(std::shared_ptr<const IntervalMesh> mesh) {
    const int n = mesh->size();
    return Field(std::move(mesh), Vector::Zero(n));
}
Field Field::zeros(std::shared_ptr<const ThinMesh> mesh, double eps) {
    const int n = mesh->size();
    return Field(std::move(mesh), eps, Vector::Zero(n));
}
Field Field::constant(std::shared_ptr<const IntervalMesh> mesh, double c) {
    const int n = mesh->size();
    return Field(std::move(mesh), Vector::Constant(n, c));
}
Field Field::constant(std::shared_ptr<const ThinMesh> mesh, double eps, double c) {
    const int n = mesh->size();
    return Field(std::move(mesh), eps, Vector::Constant(n, c));
}

const std::shared_ptr<const ThinMesh>& Field::thin_mesh() const {
    if (!on_omega()) throw ValidationError("field lives on the interval, not on Omega");
    return std::get<std::shared_ptr<const ThinMesh>>(mesh_);
}

const std::shared_ptr<const IntervalMesh>& Field::interval_mesh() const {
    if (on_omega()) throw ValidationError("field lives on Omega, not on the interval");
    return std::get<std::shared_ptr<const IntervalMesh>>(mesh_);
}

Field Field::with_values(Vector values) const {
    Field f = *this;
    require(values.size() == values_.size(), "with_values: length mismatch");
    f.values_ = std::move(values);
    return f;
}

bool Field::same_space(const Field& other) const {
    if (on_omega() != other.on_omega()) return false;
    if (on_omega()) return thin_mesh() == other.thin_mesh() && eps_ == other.eps_;
    return interval_mesh() == other.interval_mesh();
}

Field operator-(const Field& a, const Field& b) {
    require(a.same_space(b), "field difference across different spaces");
    return a.with_values(a.values() - b.values());
}

Field operator+(const Field& a, const Field& b) {
    require(a.same_space(b), "field sum across different spaces");
    return a.with_values(a.values() + b.values());
}

Field operator*(double s, const Field& a) { return a.with_values(s * a.values()); }

// ------------------------------------------------------------------ norms

NormKind parse_norm_kind(std::string_view name) {
    if (name == "L2") return NormKind::L2;
    if (name == "H1_eps") return NormKind::H1_eps;
    if (name == "L2_a") return NormKind::L2_a;
    if (name == "H1_a") return NormKind::H1_a;
    if (name == "Linf") return NormKind::Linf;
    throw ValidationError("unknown norm kind '" + std::string(name) + "'");
}

std::string_view to_string(NormKind kind) {
    switch (kind) {
        case NormKind::L2: return "L2";
        case NormKind::H1_eps: return "H1_eps";
        case NormKind::L2_a: return "L2_a";
        case NormKind::H1_a: return "H1_a";
        case NormKind::Linf: return "Linf";
    }
    return "?";
}

NormKind space_norm(bool omega, double alpha) {
    require(alpha == 0.0 || alpha == 0.5, "only alpha in {0, 1/2} is supported");
    if (omega) return alpha == 0.0 ? NormKind::L2 : NormKind::H1_eps;
    return alpha == 0.0 ? NormKind::L2_a : NormKind::H1_a;
}

SparseMatrix norm_gram(NormKind kind, const OperatorPair& op) {
    switch (kind) {
        case NormKind::L2:
            require(op.on_omega(), "L2 norm is defined on Omega; use L2_a on the interval");
            return op.mass;
        case NormKind::H1_eps:
            require(op.on_omega(), "H1_eps norm requires an Omega field");
            return op.form();
        case NormKind::L2_a:
            require(!op.on_omega(), "L2_a norm requires an interval field");
            return op.mass;
        case NormKind::H1_a:
            require(!op.on_omega(), "H1_a norm requires an interval field");
            return op.form();
        case NormKind::Linf: break;
    }
    throw ValidationError("Linf has no Gram matrix");
}

double norm(const Field& u, NormKind kind, const OperatorPair& op) {
    if (kind == NormKind::Linf) return u.values().size() ? u.values().cwiseAbs().maxCoeff() : 0.0;
    if (kind == NormKind::H1_eps) require(u.on_omega(), "H1_eps norm requires an Omega field");
    if (kind == NormKind::L2_a || kind == NormKind::H1_a) {
        require(u.on_interval(), "weighted norms require an interval field");
    }
    require(op.matches(u), "norm: operator pair was assembled for a different mesh or eps");
    const SparseMatrix G = norm_gram(kind, op);
    const double sq = u.values().dot(G * u.values());
    return std::sqrt(std::max(sq, 0.0));
}

// ---------------------------------------------------------- E, M, Poincare

Field extend(const Field& u0, std::shared_ptr<const ThinMesh> target, double eps) {
    const auto& interval = *u0.interval_mesh();
    Vector v(target->size());
    for (const auto& col : target->columns()) {
        const double value = interval.interpolate(u0.values(), col.x);
        for (int j = 0; j < col.vertex_count(); ++j) v[col.first_vertex + j] = value;
    }
    return Field(std::move(target), eps, std::move(v));
}

Field average(const Field& u) {
    const auto& mesh = u.thin_mesh();
    const auto& layers = mesh->layers();
    Vector v(layers->size());
    const auto& vals = u.values();
    for (int i = 0; i < static_cast<int>(mesh->columns().size()); ++i) {
        const auto& col = mesh->columns()[i];
        if (col.intervals == 0) {
            v[i] = vals[col.first_vertex];
            continue;
        }
        double s = 0.5 * (vals[col.first_vertex] + vals[col.first_vertex + col.intervals]);
        for (int j = 1; j < col.intervals; ++j) s += vals[col.first_vertex + j];
        v[i] = s / col.intervals;
    }
    return Field(layers, std::move(v));
}

double poincare_transverse_gap(const Field& u) {
    const auto& mesh = u.thin_mesh();
    const Field mean = extend(average(u), mesh, u.eps());
    const Vector r = u.values() - mean.values();
    const double num = r.dot(fem::thin_mass(*mesh) * r);
    const double den = u.values().dot(fem::thin_transverse_stiffness(*mesh) * u.values());
    const double scale = u.values().squaredNorm() + 1e-300;
    if (std::abs(den) <= 1e-28 * scale) {
        if (std::abs(num) <= 1e-28 * scale) return 0.0;
        throw ValidationError("poincare_transverse_gap: field has no transverse energy");
    }
    return num / den;
}

}  // namespace peaklab
