#pragma once

#include <string_view>

#include "peaklab/common.hpp"
#include "peaklab/elliptic.hpp"
#include "peaklab/field.hpp"

namespace peaklab {

enum class NormKind { L2, H1_eps, L2_a, H1_a, Linf };

NormKind parse_norm_kind(std::string_view name);
std::string_view to_string(NormKind kind);

/// (E u)(x, y) = u(x): constant along every column of the target mesh.
Field extend(const Field& u0, std::shared_ptr<const ThinMesh> target, double eps);

/// Transverse average by the trapezoid rule over each column, onto the mesh's
/// layer interval mesh. The cusp column keeps its single nodal value.
Field average(const Field& u);

/// Gram matrix G of the norm, ||u||^2 = u^T G u. Linf has none.
SparseMatrix norm_gram(NormKind kind, const OperatorPair& op);

/// Throws ValidationError on a kind/space mismatch.
double norm(const Field& u, NormKind kind, const OperatorPair& op);

/// ||u - E M u||^2_{L2} / ||d_y u||^2_{L2}; 0 when both vanish.
double poincare_transverse_gap(const Field& u);

/// The spaces X^0 and X^{1/2} on either side: L2/H1_eps on Omega, L2_a/H1_a on (0,1).
NormKind space_norm(bool omega, double alpha);

}  // namespace peaklab
