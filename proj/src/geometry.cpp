#include "peaklab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace peaklab {

namespace {

using boost::math::quadrature::gauss_kronrod;

struct LegendreRule {
    std::vector<double> points;
    std::vector<double> weights;
};

// Gauss-Legendre on [0, 1]; weights sum to 1.
LegendreRule legendre_rule(int q) {
    std::vector<double> xi, w;
    switch (q) {
        case 1: xi = {0.0}; w = {2.0}; break;
        case 2: xi = {-1.0 / std::sqrt(3.0), 1.0 / std::sqrt(3.0)}; w = {1.0, 1.0}; break;
        case 3:
            xi = {-std::sqrt(0.6), 0.0, std::sqrt(0.6)};
            w = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
            break;
        case 4: {
            const double a = std::sqrt(3.0 / 7.0 - 2.0 / 7.0 * std::sqrt(1.2));
            const double b = std::sqrt(3.0 / 7.0 + 2.0 / 7.0 * std::sqrt(1.2));
            const double wa = (18.0 + std::sqrt(30.0)) / 36.0;
            const double wb = (18.0 - std::sqrt(30.0)) / 36.0;
            xi = {-b, -a, a, b};
            w = {wb, wa, wa, wb};
            break;
        }
        case 5: {
            const double a = std::sqrt(5.0 - 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
            const double b = std::sqrt(5.0 + 2.0 * std::sqrt(10.0 / 7.0)) / 3.0;
            const double wa = (322.0 + 13.0 * std::sqrt(70.0)) / 900.0;
            const double wb = (322.0 - 13.0 * std::sqrt(70.0)) / 900.0;
            xi = {-b, -a, 0.0, a, b};
            w = {wb, wa, 128.0 / 225.0, wa, wb};
            break;
        }
        default: throw ValidationError("quadrature order must be in 1..5, got " + std::to_string(q));
    }
    LegendreRule rule;
    for (std::size_t i = 0; i < xi.size(); ++i) {
        rule.points.push_back(0.5 * (xi[i] + 1.0));
        rule.weights.push_back(0.5 * w[i]);
    }
    return rule;
}

}  // namespace

// ----------------------------------------------------------------- Profile

Profile::Profile(ProfileKind kind, int n, double alpha1, double alpha2, double K1, double K2, double x0)
    : kind_(std::move(kind)), n_(n), alpha1_(alpha1), alpha2_(alpha2), K1_(K1), K2_(K2), x0_(x0) {
    require(n_ >= 1, "profile: transverse dimension n must be >= 1");
    require(alpha1_ >= 1.0 && alpha2_ >= 1.0, "profile: alpha1, alpha2 must be >= 1");
    require(K1_ > 0.0 && K2_ > 0.0, "profile: K1, K2 must be positive");
    require(x0_ > 0.0 && x0_ < 1.0, "profile: x0 must lie in (0, 1)");
    if (const auto* table = std::get_if<TabulatedKind>(&kind_)) {
        require(table->xs.size() >= 2 && table->xs.size() == table->values.size(),
                "profile: tabulated kind needs >= 2 (x, a) samples of equal length");
        for (std::size_t i = 1; i < table->xs.size(); ++i) {
            require(table->xs[i] > table->xs[i - 1], "profile: tabulated x samples must increase");
        }
    }
    if (const auto* pw = std::get_if<PowerKind>(&kind_)) {
        require(pw->exponent > 0.0, "profile: exponent must be positive");
    }
    if (const auto* sp = std::get_if<ScaledPowerKind>(&kind_)) {
        require(sp->exponent > 0.0 && sp->coefficient > 0.0,
                "profile: scaled power needs positive coefficient and exponent");
    }
}

Profile Profile::power(double exponent, int n) {
    const double alpha = std::max(exponent, 1.0);
    return Profile(PowerKind{exponent}, n, alpha, alpha, 1.0, 1.0, 0.5);
}

double Profile::operator()(double x) const {
    if (!(x >= 0.0 && x <= 1.0)) {
        std::ostringstream os;
        os << "profile evaluated outside [0,1] at x = " << x;
        throw ValidationError(os.str());
    }
    return std::visit(
        [x](const auto& k) -> double {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, PowerKind>) {
                return x == 0.0 ? 0.0 : std::pow(x, k.exponent);
            } else if constexpr (std::is_same_v<K, ScaledPowerKind>) {
                return x == 0.0 ? 0.0 : k.coefficient * std::pow(x, k.exponent);
            } else {
                if (x < k.xs.front() || x > k.xs.back()) {
                    std::ostringstream os;
                    os << "tabulated profile queried at x = " << x << " outside [" << k.xs.front()
                       << ", " << k.xs.back() << "]";
                    throw ValidationError(os.str());
                }
                auto it = std::upper_bound(k.xs.begin(), k.xs.end(), x);
                std::size_t i = it == k.xs.end() ? k.xs.size() - 1 : static_cast<std::size_t>(it - k.xs.begin());
                if (i == 0) i = 1;
                const double t = (x - k.xs[i - 1]) / (k.xs[i] - k.xs[i - 1]);
                return (1.0 - t) * k.values[i - 1] + t * k.values[i];
            }
        },
        kind_);
}

double Profile::weight(double x) const {
    const double a = (*this)(x);
    return n_ == 1 ? a : std::pow(a, n_);
}

double Profile::leading_exponent() const {
    return std::visit(
        [this](const auto& k) -> double {
            using K = std::decay_t<decltype(k)>;
            if constexpr (std::is_same_v<K, TabulatedKind>) {
                return alpha1_;
            } else {
                return k.exponent;
            }
        },
        kind_);
}

double eval_profile(const Profile& p, double x) { return p(x); }

double default_grading(const Profile& p) { return p.alpha1() <= 1.5 ? 1.5 : 2.0; }

// ------------------------------------------------------------- Hypotheses

double h2_weight_function(const Profile& p, const ScalarFn& A01, double x, double tol) {
    if (x == 0.5) return 0.0;
    require(x > 0.0 && x <= 1.0, "W(x) requires x in (0, 1]");
    auto integrand = [&](double t) { return 1.0 / (A01(t) * p.weight(t)); };
    if (x > 0.5) {
        return -gauss_kronrod<double, 15>::integrate(integrand, 0.5, x, 15, tol);
    }
    // t = e^s keeps power-law singularities at the cusp smooth.
    auto log_integrand = [&](double s) {
        const double t = std::exp(s);
        return integrand(t) * t;
    };
    return gauss_kronrod<double, 15>::integrate(log_integrand, std::log(x), std::log(0.5), 15, tol);
}

HypothesisReport check_hypotheses(const Profile& p, const HypothesisOptions& options) {
    require(options.grid_size >= 16, "check_hypotheses: grid_size must be >= 16");
    HypothesisReport report;

    // H1
    report.h1_ok = p(0.0) == 0.0;
    if (!report.h1_ok) report.messages.push_back("H1: a(0) != 0");
    for (int i = 1; i <= options.grid_size; ++i) {
        const double x = static_cast<double>(i) / options.grid_size;
        if (!(p(x) > 0.0)) {
            report.h1_ok = false;
            std::ostringstream os;
            os << "H1: a(" << x << ") <= 0";
            report.messages.push_back(os.str());
            break;
        }
    }

    // H3
    const double gap = p.alpha1() - p.alpha2();
    report.h3_ok = gap >= 0.0 && gap < 2.0 / p.n();
    if (!report.h3_ok) report.messages.push_back("H3: alpha1 - alpha2 outside [0, 2/n)");
    for (int i = 1; i <= options.grid_size && report.h3_ok; ++i) {
        const double x = p.x0() * static_cast<double>(i) / (options.grid_size + 1);
        const double a = p(x);
        const double lower = p.K1() * std::pow(x, p.alpha1());
        const double upper = p.K2() * std::pow(x, p.alpha2());
        const double slack = 1e-12 * std::max(1.0, std::abs(a));
        if (a < lower - slack || a > upper + slack) {
            report.h3_ok = false;
            std::ostringstream os;
            os << "H3: bracket K1 x^alpha1 <= a(x) <= K2 x^alpha2 fails at x = " << x;
            report.messages.push_back(os.str());
        }
    }

    // H2: int_0^1 a^n W^2 split into [1/2, 1] and dyadic shells [2^{-k-1}, 2^{-k}].
    const double inner_tol = std::min(1e-12, options.tol);
    auto integrand = [&](double x) {
        const double W = h2_weight_function(p, options.A01, x, inner_tol);
        return p.weight(x) * W * W;
    };
    for (double x : {0.5, 0.25, 0.125, 0.0625, 0.75, 1.0}) {
        report.W_samples.emplace_back(x, h2_weight_function(p, options.A01, x, inner_tol));
    }
    if (!report.h1_ok) {
        report.h2_integral = std::numeric_limits<double>::infinity();
        report.messages.push_back("H2: skipped, H1 failed");
        return report;
    }

    double sum = gauss_kronrod<double, 15>::integrate(integrand, 0.5, 1.0, 15, options.tol);
    int quiet_levels = 0;
    bool converged = false;
    for (int k = 1; k <= options.max_levels; ++k) {
        const double hi = std::ldexp(1.0, -k);
        const double lo = 0.5 * hi;
        // log substitution inside the shell
        auto shell = [&](double s) {
            const double x = std::exp(s);
            return integrand(x) * x;
        };
        const double piece = gauss_kronrod<double, 15>::integrate(shell, std::log(lo), std::log(hi), 15, options.tol);
        if (!std::isfinite(piece) || !std::isfinite(sum + piece)) break;
        sum += piece;
        if (std::abs(piece) <= options.tol * std::abs(sum)) {
            if (++quiet_levels >= 3) {
                converged = true;
                break;
            }
        } else {
            quiet_levels = 0;
        }
    }
    report.h2_finite = converged;
    report.h2_integral = converged ? sum : std::numeric_limits<double>::infinity();
    if (!converged) report.messages.push_back("H2: integral of a^n W^2 did not converge");
    return report;
}

HypothesisReport check_hypotheses(const Profile& p, int grid_size, double tol) {
    HypothesisOptions options;
    options.grid_size = grid_size;
    options.tol = tol;
    return check_hypotheses(p, options);
}

// ------------------------------------------------------------ IntervalMesh

IntervalMesh::IntervalMesh(std::vector<double> nodes, double grading_exponent, int quadrature_points)
    : nodes_(std::move(nodes)), grading_(grading_exponent) {
    require(nodes_.size() >= 2, "interval mesh needs at least one element");
    require(nodes_.front() == 0.0 && nodes_.back() == 1.0, "interval mesh must span [0, 1]");
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
        require(nodes_[i] > nodes_[i - 1], "interval mesh nodes must strictly increase");
    }
    auto rule = legendre_rule(quadrature_points);
    gauss_points_ = std::move(rule.points);
    gauss_weights_ = std::move(rule.weights);
}

double IntervalMesh::min_element_length() const {
    double h = 1.0;
    for (int e = 0; e < elements(); ++e) h = std::min(h, element_length(e));
    return h;
}

double IntervalMesh::max_element_length() const {
    double h = 0.0;
    for (int e = 0; e < elements(); ++e) h = std::max(h, element_length(e));
    return h;
}

int IntervalMesh::locate(double x) const {
    require(x >= 0.0 && x <= 1.0, "interval mesh: point outside [0, 1]");
    auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
    int e = static_cast<int>(it - nodes_.begin()) - 1;
    return std::clamp(e, 0, elements() - 1);
}

double IntervalMesh::interpolate(const Vector& values, double x) const {
    const int e = locate(x);
    const double t = (x - nodes_[e]) / element_length(e);
    return (1.0 - t) * values[e] + t * values[e + 1];
}

std::shared_ptr<const IntervalMesh> build_interval_mesh(int N, double grading_exponent, int quadrature_points) {
    require(N >= 4, "build_interval_mesh: N must be >= 4");
    require(grading_exponent >= 1.0, "build_interval_mesh: grading exponent must be >= 1");
    std::vector<double> nodes(N + 1);
    for (int i = 0; i <= N; ++i) {
        nodes[i] = std::pow(static_cast<double>(i) / N, grading_exponent);
    }
    nodes.front() = 0.0;
    nodes.back() = 1.0;
    return std::make_shared<const IntervalMesh>(std::move(nodes), grading_exponent, quadrature_points);
}

// --------------------------------------------------------------- ThinMesh

double ThinMesh::signed_area(int t) const {
    const auto& tri = triangles_[t];
    const auto& a = vertices_[tri[0]];
    const auto& b = vertices_[tri[1]];
    const auto& c = vertices_[tri[2]];
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

double ThinMesh::total_area() const {
    double s = 0.0;
    for (int t = 0; t < static_cast<int>(triangles_.size()); ++t) s += signed_area(t);
    return s;
}

double ThinMesh::polygon_area() const {
    double s = 0.0;
    for (std::size_t i = 1; i < columns_.size(); ++i) {
        s += (columns_[i].x - columns_[i - 1].x) * (columns_[i].half_width + columns_[i - 1].half_width);
    }
    return s;
}

double ThinMesh::max_x_spacing() const { return layers_->max_element_length(); }

std::shared_ptr<const ThinMesh> build_thin_mesh(const Profile& p, int N_x, double transverse_density,
                                                double grading_exponent) {
    require(p.n() == 1, "build_thin_mesh: only n = 1 is supported");
    require(N_x >= 8, "build_thin_mesh: N_x must be >= 8");
    require(transverse_density > 0.0, "build_thin_mesh: transverse density must be positive");

    auto mesh = std::shared_ptr<ThinMesh>(new ThinMesh());
    mesh->layers_ = build_interval_mesh(N_x, grading_exponent);
    const auto& xs = mesh->layers_->nodes();

    for (int i = 0; i <= N_x; ++i) {
        Column col;
        col.x = xs[i];
        col.half_width = p(col.x);
        col.first_vertex = static_cast<int>(mesh->vertices_.size());
        if (col.half_width > 0.0) {
            const double h = i == 0 ? xs[1] - xs[0] : xs[i] - xs[i - 1];
            int m = std::max(1, static_cast<int>(std::ceil(transverse_density * col.half_width / h - 1e-12)));
            m += m % 2;
            col.intervals = m;
        } else {
            col.intervals = 0;
        }
        for (int j = 0; j <= col.intervals; ++j) {
            double y = 0.0;
            if (col.intervals > 0) {
                const int half = col.intervals / 2;
                y = j == half ? 0.0 : col.half_width * static_cast<double>(j - half) / half;
            }
            mesh->vertices_.push_back({col.x, y});
            mesh->vertex_column_.push_back(i);
        }
        mesh->columns_.push_back(col);
    }

    // Upper half of each strip by a zipper walk from y = 0 outward; the lower
    // half mirrors it.
    for (int i = 0; i < N_x; ++i) {
        const Column& L = mesh->columns_[i];
        const Column& R = mesh->columns_[i + 1];
        const int hl = L.intervals / 2;
        const int hr = R.intervals / 2;
        auto vid = [](const Column& c, int offset, int side) {
            const int mid = c.first_vertex + c.intervals / 2;
            return mid + side * offset;
        };
        int jl = 0, jr = 0;
        while (jl < hl || jr < hr) {
            bool advance_left;
            if (jl == hl) {
                advance_left = false;
            } else if (jr == hr) {
                advance_left = true;
            } else {
                // compare normalized positions of the next nodes; cross-multiplied
                advance_left = static_cast<long>(jl + 1) * hr <= static_cast<long>(jr + 1) * hl;
            }
            for (int side : {1, -1}) {
                std::array<int, 3> tri;
                if (advance_left) {
                    tri = {vid(L, jl, side), vid(R, jr, side), vid(L, jl + 1, side)};
                } else {
                    tri = {vid(L, jl, side), vid(R, jr, side), vid(R, jr + 1, side)};
                }
                mesh->triangles_.push_back(tri);
                const int t = static_cast<int>(mesh->triangles_.size()) - 1;
                if (mesh->signed_area(t) < 0.0) std::swap(mesh->triangles_[t][1], mesh->triangles_[t][2]);
                if (!(mesh->signed_area(t) > 0.0)) {
                    std::ostringstream os;
                    os << "build_thin_mesh: degenerate triangle between columns " << i << " and " << i + 1
                       << " (x = " << L.x << ")";
                    throw NumericalError(os.str());
                }
            }
            if (advance_left) ++jl; else ++jr;
        }
        mesh->boundary_.push_back({vid(L, hl, 1), vid(R, hr, 1), BoundaryTag::top});
        mesh->boundary_.push_back({vid(L, hl, -1), vid(R, hr, -1), BoundaryTag::bottom});
    }
    auto add_column_edges = [&](const Column& c, BoundaryTag tag) {
        for (int j = 0; j < c.intervals; ++j) {
            mesh->boundary_.push_back({c.first_vertex + j, c.first_vertex + j + 1, tag});
        }
    };
    add_column_edges(mesh->columns_.back(), BoundaryTag::right);
    add_column_edges(mesh->columns_.front(), BoundaryTag::left);

    for (const auto& v : mesh->vertices_) {
        if (std::abs(v.y) > p(v.x) + 1e-12) {
            throw NumericalError("build_thin_mesh: vertex outside the domain");
        }
    }
    return mesh;
}

}  // namespace peaklab
