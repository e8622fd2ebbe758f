#include "peaklab/attractor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "peaklab/parallel.hpp"

namespace peaklab {

// ------------------------------------------------------- SpectralProjection

Vector SpectralProjection::coordinates(const Field& u) const {
    Vector v(rank);
    const Vector mu = lumped_mass.cwiseProduct(u.values());
    for (int i = 0; i < rank; ++i) v[i] = basis[i].values().dot(mu);
    return v;
}

Field SpectralProjection::apply(const Field& u) const {
    const Vector v = coordinates(u);
    Vector out = Vector::Zero(u.size());
    for (int i = 0; i < rank; ++i) out += v[i] * basis[i].values();
    return u.with_values(std::move(out));
}

Field SpectralProjection::unit_direction(int i) const {
    const Vector& phi = basis.at(i).values();
    return basis[i].with_values(phi / phi.cwiseAbs().maxCoeff());
}

namespace {

/// `u` moved onto the space of `like` (extension when needed).
Field onto(const Field& u, const Field& like) {
    if (like.on_omega() && u.on_interval()) return extend(u, like.thin_mesh(), like.eps());
    require(u.on_omega() == like.on_omega(), "field cannot be moved onto the requested space");
    return u;
}

}  // namespace

void SpectralProjection::align_to(const SpectralProjection& reference) {
    require(rank == reference.rank, "align_to: projection ranks differ");
    for (int i = 0; i < rank; ++i) {
        const Field ref = onto(reference.basis[i], basis[i]);
        const double inner = basis[i].values().dot(lumped_mass.cwiseProduct(ref.values()));
        if (inner < 0.0) basis[i].values() *= -1.0;
    }
}

SpectralProjection spectral_projection(const Equilibrium& e, const OperatorPair& op, int k_max) {
    require(op.matches(e.state), "spectral_projection: equilibrium and operator live on different spaces");
    require(e.hyperbolic, "spectral_projection: equilibrium is not hyperbolic");
    if (k_max < e.morse_index) {
        std::ostringstream os;
        os << "spectral_projection: k_max = " << k_max << " is below the Morse index " << e.morse_index;
        throw ValidationError(os.str());
    }
    require(static_cast<int>(e.spectrum.vectors.size()) >= e.morse_index,
            "spectral_projection: spectrum does not cover the unstable space");
    SpectralProjection proj;
    proj.rank = e.morse_index;
    proj.lumped_mass = op.lumped_mass;
    for (int i = 0; i < proj.rank; ++i) {
        proj.basis.push_back(e.spectrum.vectors[i]);
        proj.eigenvalues.push_back(e.spectrum.values[i]);
    }
    return proj;
}

double projection_distance(const SpectralProjection& eps_side, const SpectralProjection& limit_side,
                           const OperatorPair& thin_op) {
    require(eps_side.rank == limit_side.rank, "projection_distance: ranks differ");
    double worst = 0.0;
    for (int i = 0; i < eps_side.rank; ++i) {
        const Field& psi = eps_side.basis[i];
        Field ref = onto(limit_side.basis[i], psi);
        const double scale = std::sqrt(ref.values().dot(eps_side.lumped_mass.cwiseProduct(ref.values())));
        ref.values() /= scale;
        if (psi.values().dot(eps_side.lumped_mass.cwiseProduct(ref.values())) < 0.0) ref.values() *= -1.0;
        worst = std::max(worst, norm(psi - ref, NormKind::H1_eps, thin_op));
    }
    return worst;
}

// ------------------------------------------------------------ manifolds

const Ray& ManifoldSample::principal(int family) const {
    for (const auto& r : rays) {
        if (r.family == family) return r;
    }
    throw ValidationError("ManifoldSample: no ray for the requested family");
}

namespace {

struct Direction {
    std::vector<double> coords;
    Vector values;  ///< L-inf normalized
};

std::vector<Direction> seed_directions(const SpectralProjection& proj, int angles) {
    std::vector<Direction> dirs;
    if (proj.rank == 2) {
        require(angles >= 2 && angles % 2 == 0, "sample_unstable_manifold: angles must be even and >= 2");
        const Vector p1 = proj.unit_direction(0).values();
        const Vector p2 = proj.unit_direction(1).values();
        const int half = angles / 2;
        for (int k = 0; k < half; ++k) {
            const double th = M_PI * k / half;
            Vector d = std::cos(th) * p1 + std::sin(th) * p2;
            const double s = d.cwiseAbs().maxCoeff();
            dirs.push_back({{std::cos(th) / s, std::sin(th) / s}, d / s});
        }
        // the opposite half is the exact negation
        for (int k = 0; k < half; ++k) {
            Direction neg = dirs[k];
            for (double& c : neg.coords) c = -c;
            neg.values = -neg.values;
            dirs.push_back(std::move(neg));
        }
        return dirs;
    }
    // rank 1, and a signed-axis fallback for higher ranks
    for (int i = 0; i < proj.rank; ++i) {
        for (double sign : {1.0, -1.0}) {
            Direction d;
            d.coords.assign(proj.rank, 0.0);
            d.coords[i] = sign;
            d.values = sign * proj.unit_direction(i).values();
            dirs.push_back(std::move(d));
        }
    }
    return dirs;
}

void record(Trajectory& traj, const OperatorPair& op, const SparseMatrix& form, double t, const Field& u) {
    const Vector& v = u.values();
    traj.times.push_back(t);
    traj.states.push_back(u);
    traj.norm_x0.push_back(std::sqrt(std::max(v.dot(op.mass * v), 0.0)));
    traj.norm_x12.push_back(std::sqrt(std::max(v.dot(form * v), 0.0)));
    traj.linf.push_back(v.cwiseAbs().maxCoeff());
}

Ray integrate_ray(const Field& anchor, const Vector& direction, double amplitude, const ImexStepper& stepper,
                  const OperatorPair& op, const SparseMatrix& form, const std::vector<Field>& sinks,
                  const ManifoldOptions& options) {
    Ray ray;
    ray.amplitude = amplitude;
    ray.path.interval_side = !op.on_omega();
    Field u = anchor.with_values(anchor.values() + amplitude * direction);
    record(ray.path, op, form, 0.0, u);
    Vector last = u.values();
    const double record_gap = 0.02 * options.R_loc;
    const long max_steps = std::lround(options.T_max / options.dt);
    for (long k = 1; k <= max_steps; ++k) {
        Vector next = stepper.step_values(u.values());
        const double change = (next - u.values()).cwiseAbs().maxCoeff();
        u.values() = std::move(next);
        const double t = k * options.dt;
        bool done = false;
        if (sinks.empty()) {
            done = change <= options.end_tol * options.dt;
        } else if (k % 10 == 0) {
            for (const auto& s : sinks) done = done || (u.values() - s.values()).cwiseAbs().maxCoeff() <= options.end_tol;
        }
        if (done || (u.values() - last).cwiseAbs().maxCoeff() >= record_gap) {
            record(ray.path, op, form, t, u);
            last = u.values();
        }
        if (ray.exit_index < 0 && (u.values() - anchor.values()).cwiseAbs().maxCoeff() > options.R_loc) {
            if (ray.path.times.back() != t) {
                record(ray.path, op, form, t, u);
                last = u.values();
            }
            ray.exit_index = static_cast<int>(ray.path.times.size()) - 1;
        }
        if (done) {
            ray.complete = true;
            ray.end_time = t;
            return ray;
        }
    }
    if (ray.path.times.back() < options.T_max) record(ray.path, op, form, options.T_max, u);
    ray.end_time = options.T_max;
    return ray;
}

}  // namespace

ManifoldSample sample_unstable_manifold(const Equilibrium& e, const SpectralProjection& proj, const OperatorPair& op,
                                        const Nonlinearity& nl, const std::vector<Field>& sinks,
                                        const ManifoldOptions& options) {
    require(op.matches(e.state), "sample_unstable_manifold: equilibrium and operator live on different spaces");
    require(!options.amplitudes.empty(), "sample_unstable_manifold: no amplitudes");
    for (std::size_t i = 0; i < options.amplitudes.size(); ++i) {
        require(options.amplitudes[i] > 0.0 && options.amplitudes[i] <= options.R_loc / 2.0,
                "sample_unstable_manifold: amplitudes must lie in (0, R_loc/2]");
        if (i > 0) require(options.amplitudes[i] > options.amplitudes[i - 1], "amplitudes must be strictly increasing");
    }
    ManifoldSample sample;
    sample.anchor = e;
    sample.projection = proj;
    sample.options = options;
    if (proj.rank == 0) return sample;

    const std::vector<Direction> dirs = seed_directions(proj, options.angles);
    const ImexStepper stepper(op, nl, options.dt);
    const SparseMatrix form = op.form();
    const int na = static_cast<int>(options.amplitudes.size());
    const int total = static_cast<int>(dirs.size()) * na;
    sample.rays = parallel_map(total, options.jobs, [&](int idx) {
        const int f = idx / na;
        Ray r = integrate_ray(e.state, dirs[f].values, options.amplitudes[idx % na], stepper, op, form, sinks, options);
        r.family = f;
        r.seed_coords = dirs[f].coords;
        return r;
    });
    for (const auto& r : sample.rays) sample.incomplete = sample.incomplete || !r.complete;

    sample.graph_points.resize(dirs.size());
    std::vector<double> scales(proj.rank);
    for (int i = 0; i < proj.rank; ++i) scales[i] = proj.basis[i].values().cwiseAbs().maxCoeff();
    for (std::size_t f = 0; f < dirs.size(); ++f) {
        const Ray& ray = sample.principal(static_cast<int>(f));
        const int stop = ray.exit_index < 0 ? static_cast<int>(ray.path.states.size()) : ray.exit_index;
        for (int s = 0; s < stop; ++s) {
            const Field offset = ray.path.states[s] - e.state;
            Vector v = proj.coordinates(offset);
            Vector vpart = Vector::Zero(offset.size());
            for (int i = 0; i < proj.rank; ++i) vpart += v[i] * proj.basis[i].values();
            for (int i = 0; i < proj.rank; ++i) v[i] *= scales[i];
            sample.graph_points[f].push_back({v, offset.with_values(offset.values() - vpart)});
        }
    }
    return sample;
}

namespace {

struct RadialCurve {
    std::vector<double> r;
    std::vector<const Field*> w;
};

RadialCurve radial(const std::vector<GraphPoint>& pts) {
    RadialCurve c;
    for (const auto& g : pts) {
        const double r = g.coords.norm();
        if (!c.r.empty() && r <= c.r.back()) break;
        c.r.push_back(r);
        c.w.push_back(&g.w);
    }
    return c;
}

Vector interpolate_curve(const RadialCurve& c, double r) {
    auto it = std::upper_bound(c.r.begin(), c.r.end(), r);
    std::size_t j = std::clamp<std::size_t>(it - c.r.begin(), 1, c.r.size() - 1);
    const double t = (r - c.r[j - 1]) / (c.r[j] - c.r[j - 1]);
    return (1.0 - t) * c.w[j - 1]->values() + t * c.w[j]->values();
}

}  // namespace

double graph_compare(const ManifoldSample& eps_side, const ManifoldSample& limit_side, const OperatorPair& thin_op,
                     NormKind kind, int grid) {
    if (eps_side.projection.rank != limit_side.projection.rank || eps_side.families() != limit_side.families() ||
        eps_side.options.amplitudes != limit_side.options.amplitudes) {
        throw ValidationError("graph_compare: ray grids of the two samples do not match");
    }
    require(grid >= 2, "graph_compare: grid must have >= 2 points");
    double worst = 0.0;
    for (int f = 0; f < eps_side.families(); ++f) {
        const RadialCurve a = radial(eps_side.graph_points[f]);
        const RadialCurve b = radial(limit_side.graph_points[f]);
        if (a.r.size() < 2 || b.r.size() < 2) continue;
        const double lo = std::max(a.r.front(), b.r.front());
        const double hi = std::min(a.r.back(), b.r.back());
        if (!(hi > lo)) continue;
        const Field& like = *a.w.front();
        const Field& limit_like = *b.w.front();
        for (int k = 0; k < grid; ++k) {
            const double r = lo + (hi - lo) * k / (grid - 1);
            const Field wa = like.with_values(interpolate_curve(a, r));
            const Field wb = onto(limit_like.with_values(interpolate_curve(b, r)), like);
            worst = std::max(worst, norm(wa - wb, kind, thin_op));
        }
    }
    return worst;
}

// ------------------------------------------------------------- attractor

double sampling_density(const AttractorSample& A, NormKind kind, const OperatorPair& op) {
    double worst = 0.0;
    for (const auto& chain : A.chains) {
        for (std::size_t i = 1; i < chain.size(); ++i) {
            const Field& a = A.points[chain[i - 1]].state;
            const Field& b = A.points[chain[i]].state;
            if (op.on_omega()) {
                const Field like = Field::zeros(std::get<std::shared_ptr<const ThinMesh>>(op.mesh), op.eps);
                worst = std::max(worst, norm(onto(a, like) - onto(b, like), kind, op));
            } else {
                worst = std::max(worst, norm(a - b, kind, op));
            }
        }
    }
    return worst;
}

AttractorSample assemble_attractor(const EquilibriumAtlas& atlas, const OperatorPair& op, const Nonlinearity& nl,
                                   const AttractorOptions& options, const std::vector<SpectralProjection>* aligned) {
    require(!atlas.entries.empty(), "assemble_attractor: empty atlas");
    for (const auto& e : atlas.entries) {
        require(e.hyperbolic, "assemble_attractor: atlas contains a non-hyperbolic equilibrium");
        require(op.matches(e.state), "assemble_attractor: atlas and operator live on different spaces");
    }
    if (aligned) require(aligned->size() == atlas.entries.size(), "assemble_attractor: one projection per entry");

    AttractorSample sample;
    sample.kind = space_norm(op.on_omega(), options.alpha);
    if (op.on_omega()) {
        std::ostringstream os;
        os << "omega(" << op.eps << ")";
        sample.space_tag = os.str();
    } else {
        sample.space_tag = "interval";
    }
    const int ne = static_cast<int>(atlas.entries.size());
    require(options.point_budget >= ne, "assemble_attractor: point budget below the equilibrium count");
    std::vector<Field> sinks;
    std::vector<int> sink_index;
    for (int i = 0; i < ne; ++i) {
        sample.points.push_back({atlas.entries[i].state, "equilibrium", i, -1, 0.0});
        if (atlas.entries[i].morse_index == 0) {
            sinks.push_back(atlas.entries[i].state);
            sink_index.push_back(i);
        }
    }
    sample.equilibria = ne;

    ManifoldOptions mopts = options.manifold;
    mopts.amplitudes = {options.manifold.amplitudes.front()};
    struct RayData {
        int anchor;
        Ray ray;
    };
    std::vector<RayData> rays;
    for (int i = 0; i < ne; ++i) {
        const Equilibrium& e = atlas.entries[i];
        if (e.morse_index == 0) continue;
        const SpectralProjection proj = aligned ? (*aligned)[i] : spectral_projection(e, op, e.morse_index);
        ManifoldSample ms = sample_unstable_manifold(e, proj, op, nl, sinks, mopts);
        for (auto& r : ms.rays) rays.push_back({i, std::move(r)});
    }
    sample.rays = static_cast<int>(rays.size());

    // arc lengths along anchor -> snapshots
    const SparseMatrix G = norm_gram(sample.kind, op);
    auto dist = [&](const Vector& a, const Vector& b) {
        const Vector d = a - b;
        return std::sqrt(std::max(d.dot(G * d), 0.0));
    };
    std::vector<std::vector<double>> arcs(rays.size());
    double total = 0.0;
    for (std::size_t r = 0; r < rays.size(); ++r) {
        const auto& states = rays[r].ray.path.states;
        Vector prev = atlas.entries[rays[r].anchor].state.values();
        double s = 0.0;
        for (const auto& st : states) {
            s += dist(prev, st.values());
            arcs[r].push_back(s);
            prev = st.values();
        }
        total += s;
    }
    const int remaining = options.point_budget - ne;
    if (!rays.empty() && remaining < static_cast<int>(rays.size())) {
        sample.flags.push_back("point_budget_below_ray_count");
    }

    for (std::size_t r = 0; r < rays.size(); ++r) {
        const Ray& ray = rays[r].ray;
        const auto& arc = arcs[r];
        std::vector<int> chain = {rays[r].anchor};
        if (!ray.complete) {
            sample.incomplete = true;
            sample.flags.push_back("incomplete_ray");
        }
        int quota = total > 0.0 ? static_cast<int>(std::floor(remaining * arc.back() / total)) : 0;
        quota = std::min<int>(std::max(quota, remaining >= static_cast<int>(rays.size()) ? 1 : 0),
                              static_cast<int>(arc.size()));
        int last_pick = -1;
        for (int k = 1; k <= quota; ++k) {
            const double target = arc.back() * k / quota;
            const int pick = static_cast<int>(std::lower_bound(arc.begin(), arc.end(), target - 1e-15) - arc.begin());
            const int j = std::min<int>(pick, static_cast<int>(arc.size()) - 1);
            if (j == last_pick) continue;
            last_pick = j;
            sample.points.push_back({ray.path.states[j], "ray", rays[r].anchor, static_cast<int>(r), ray.path.times[j]});
            chain.push_back(static_cast<int>(sample.points.size()) - 1);
        }
        // close the chain at the sink the ray reached
        const Field& end = ray.path.states.back();
        int reached = -1;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t s = 0; s < sinks.size(); ++s) {
            const double d = (end.values() - sinks[s].values()).cwiseAbs().maxCoeff();
            if (d < best) {
                best = d;
                reached = sink_index[s];
            }
        }
        if (reached >= 0 && best <= 1e-4) {
            chain.push_back(reached);
        } else {
            sample.flags.push_back("ray_endpoint_not_at_sink");
            sample.incomplete = true;
        }
        sample.chains.push_back(std::move(chain));
    }
    std::sort(sample.flags.begin(), sample.flags.end());
    sample.flags.erase(std::unique(sample.flags.begin(), sample.flags.end()), sample.flags.end());
    sample.sampling_density = sampling_density(sample, sample.kind, op);
    return sample;
}

// ------------------------------------------------------------- distances

namespace {

/// Columns are the points of `A`, moved onto op's space.
DenseMatrix stack(const AttractorSample& A, const OperatorPair& op) {
    DenseMatrix X(op.size(), A.points.size());
    const bool omega = op.on_omega();
    for (std::size_t j = 0; j < A.points.size(); ++j) {
        const Field& f = A.points[j].state;
        if (omega && f.on_interval()) {
            X.col(j) = extend(f, std::get<std::shared_ptr<const ThinMesh>>(op.mesh), op.eps).values();
        } else {
            require(f.on_omega() == omega && f.size() == op.size(), "hausdorff_distance: sample space mismatch");
            X.col(j) = f.values();
        }
    }
    return X;
}

/// min_j ||x_i - y_j|| for every column i of X.
std::vector<double> nearest(const DenseMatrix& X, const DenseMatrix& Y, const SparseMatrix* G, int jobs) {
    const int nx = static_cast<int>(X.cols());
    std::vector<double> out(nx);
    if (!G) {
        auto rows = parallel_map(nx, jobs, [&](int i) {
            double best = std::numeric_limits<double>::infinity();
            for (int j = 0; j < Y.cols(); ++j) best = std::min(best, (X.col(i) - Y.col(j)).cwiseAbs().maxCoeff());
            return best;
        });
        return rows;
    }
    const DenseMatrix GY = (*G) * Y;
    const Vector ny = (Y.cwiseProduct(GY)).colwise().sum().transpose();
    const int block = 128;
    const int blocks = (nx + block - 1) / block;
    auto parts = parallel_map(blocks, jobs, [&](int b) {
        const int lo = b * block;
        const int len = std::min(block, nx - lo);
        const DenseMatrix Xb = X.middleCols(lo, len);
        const DenseMatrix GXb = (*G) * Xb;
        const Vector nxb = (Xb.cwiseProduct(GXb)).colwise().sum().transpose();
        const DenseMatrix C = Xb.transpose() * GY;
        std::vector<double> best(len);
        for (int i = 0; i < len; ++i) {
            Eigen::Index jmin = 0;
            (nxb[i] + ny.array() - 2.0 * C.row(i).transpose().array()).minCoeff(&jmin);
            // exact distance for the winner; the expanded form loses digits near 0
            const Vector d = Xb.col(i) - Y.col(jmin);
            best[i] = std::sqrt(std::max(d.dot((*G) * d), 0.0));
        }
        return best;
    });
    for (int b = 0; b < blocks; ++b) {
        for (std::size_t i = 0; i < parts[b].size(); ++i) out[b * block + i] = parts[b][i];
    }
    return out;
}

}  // namespace

std::pair<double, double> hausdorff_distance(const AttractorSample& A, const AttractorSample& B, NormKind kind,
                                             const OperatorPair& op, int jobs) {
    require(!A.points.empty() && !B.points.empty(), "hausdorff_distance: empty sample");
    const DenseMatrix X = stack(A, op);
    const DenseMatrix Y = stack(B, op);
    SparseMatrix G;
    const SparseMatrix* gp = nullptr;
    if (kind != NormKind::Linf) {
        G = norm_gram(kind, op);
        gp = &G;
    }
    const auto ab = nearest(X, Y, gp, jobs);
    const auto ba = nearest(Y, X, gp, jobs);
    return {*std::max_element(ab.begin(), ab.end()), *std::max_element(ba.begin(), ba.end())};
}

AttractionCheck exponential_attraction_check(const OperatorPair& op, const Nonlinearity& nl,
                                             const AttractorSample& attractor, const std::vector<Field>& B, double T,
                                             double dt, double norm_cap) {
    require(!B.empty(), "exponential_attraction_check: empty set B");
    require(T >= 1.0, "exponential_attraction_check: T must be >= 1");
    for (const auto& b : B) {
        require(op.matches(b), "exponential_attraction_check: field and operator live on different spaces");
        require(b.values().cwiseAbs().maxCoeff() <= norm_cap, "exponential_attraction_check: B exceeds the norm cap");
    }
    const NormKind kind = attractor.kind;
    const DenseMatrix Y = stack(attractor, op);
    const SparseMatrix G = norm_gram(kind, op);
    const ImexStepper stepper(op, nl, dt);
    const long steps = std::lround(T / dt);
    const long every = std::max<long>(1, std::lround(0.1 / dt));
    const long first = std::lround(1.0 / dt);

    std::vector<std::vector<double>> per_b(B.size());
    std::vector<double> times;
    for (std::size_t i = 0; i < B.size(); ++i) {
        Vector u = B[i].values();
        for (long k = 1; k <= steps; ++k) {
            u = stepper.step_values(u);
            if (k >= first && (k - first) % every == 0) {
                DenseMatrix X(u.size(), 1);
                X.col(0) = u;
                per_b[i].push_back(nearest(X, Y, &G, 1).front());
                if (i == 0) times.push_back(k * dt);
            }
        }
    }
    AttractionCheck check;
    for (std::size_t s = 0; s < times.size(); ++s) {
        double worst = 0.0;
        for (const auto& series : per_b) worst = std::max(worst, series[s]);
        check.series.emplace_back(times[s], worst);
    }
    // tail: second half of the points above the roundoff level
    std::vector<std::pair<double, double>> tail;
    for (const auto& [t, d] : check.series) {
        if (d > 1e-10) tail.emplace_back(t, std::log(d));
    }
    tail.erase(tail.begin(), tail.begin() + static_cast<long>(tail.size() / 2));
    if (tail.size() >= 2) {
        double mt = 0.0, ml = 0.0;
        for (const auto& [t, l] : tail) {
            mt += t;
            ml += l;
        }
        mt /= tail.size();
        ml /= tail.size();
        double sxy = 0.0, sxx = 0.0;
        for (const auto& [t, l] : tail) {
            sxy += (t - mt) * (l - ml);
            sxx += (t - mt) * (t - mt);
        }
        check.exponent = -sxy / sxx;
        for (std::size_t i = 2; i < tail.size(); ++i) {
            const double second = tail[i].second - 2.0 * tail[i - 1].second + tail[i - 2].second;
            if (second < -1e-3 * (1.0 + std::abs(tail[i].second - tail[i - 1].second))) check.convex_tail = false;
            if (tail[i].second > tail[i - 1].second + 1e-12) check.convex_tail = false;
        }
    }
    return check;
}

// ------------------------------------------------------------- rate

AttractorRateResult attractor_rate_experiment(const Profile& p, const CoefficientSpec& coeff, const Nonlinearity& nl,
                                              const std::vector<double>& eps_list,
                                              const AttractorRateOptions& options) {
    require(eps_list.size() >= 3, "attractor_rate_experiment: eps_list needs >= 3 entries for a rate fit");
    for (std::size_t i = 1; i < eps_list.size(); ++i) {
        require(eps_list[i] < eps_list[i - 1], "attractor_rate_experiment: eps_list must be decreasing");
    }
    validate_nonlinearity(nl);
    coeff.validate(p);
    const auto mesh = build_thin_mesh(p, options.mesh.N_x, options.mesh.density, options.mesh.grading);
    const OperatorPair limit_op = assemble_limit(p, coeff, mesh->layers());
    EnumerationOptions eopts;
    eopts.newton = options.newton;
    const EquilibriumAtlas atlas0 = enumerate_equilibria(limit_op, nl, options.strategy, eopts);
    for (const auto& e : atlas0.entries) {
        if (!e.hyperbolic) throw ValidationError("attractor_rate_experiment: limit atlas is not hyperbolic");
    }
    std::vector<SpectralProjection> proj0;
    for (const auto& e : atlas0.entries) proj0.push_back(spectral_projection(e, limit_op, std::max(e.morse_index, 1)));
    const AttractorSample A0 = assemble_attractor(atlas0, limit_op, nl, options.attractor, &proj0);

    AttractorRateResult result;
    result.limit_equilibria = static_cast<int>(atlas0.entries.size());
    result.limit_points = static_cast<int>(A0.points.size());
    result.table.name = "attractor";
    result.table.norm_kind = "H1_eps";
    result.table.floor = 1e-12;
    if (A0.incomplete) result.table.flags.push_back("incomplete_ray");

    struct Row {
        bool ok = false;
        std::string failure;
        double d = 0.0, floor = 0.0;
        std::pair<double, double> semi;
        bool incomplete = false;
    };
    AttractorOptions inner = options.attractor;
    inner.manifold.jobs = 1;
    auto rows = parallel_map(static_cast<int>(eps_list.size()), options.jobs, [&](int k) {
        Row row;
        const double eps = eps_list[k];
        const OperatorPair op = assemble_thin(p, coeff, mesh, eps);
        EquilibriumAtlas atlas;
        std::vector<SpectralProjection> proj;
        for (std::size_t i = 0; i < atlas0.entries.size(); ++i) {
            const Field seed = extend(atlas0.entries[i].state, mesh, eps);
            Equilibrium e;
            try {
                e = newton_solve(op, nl, seed, options.newton);
            } catch (const NumericalError& ex) {
                row.failure = ex.what();
                return row;
            }
            if (!e.converged || !e.hyperbolic || e.morse_index != atlas0.entries[i].morse_index ||
                norm(e.state - seed, NormKind::H1_eps, op) > options.isolation_radius) {
                std::ostringstream os;
                os << "pairing failure for limit equilibrium " << i << " at eps = " << eps;
                row.failure = os.str();
                return row;
            }
            SpectralProjection sp = spectral_projection(e, op, std::max(e.morse_index, 1));
            sp.align_to(proj0[i]);
            proj.push_back(std::move(sp));
            atlas.entries.push_back(std::move(e));
        }
        const AttractorSample Ae = assemble_attractor(atlas, op, nl, inner, &proj);
        row.semi = hausdorff_distance(Ae, A0, NormKind::H1_eps, op);
        row.d = row.semi.first + row.semi.second;
        row.floor = std::max(Ae.sampling_density, sampling_density(A0, NormKind::H1_eps, op));
        row.incomplete = Ae.incomplete;
        row.ok = true;
        return row;
    });
    for (std::size_t k = 0; k < eps_list.size(); ++k) {
        const Row& row = rows[k];
        if (!row.ok) {
            // partial table: stop at the first failure
            result.table.flags.push_back("pairing_failure");
            break;
        }
        if (row.incomplete) result.table.flags.push_back("incomplete_ray");
        result.table.pairs.emplace_back(eps_list[k], row.d);
        result.table.mesh_h.push_back(mesh->max_x_spacing());
        result.sampling_floor.push_back(row.floor);
        result.semi_distances.push_back(row.semi);
        if (row.d <= row.floor) result.table.flags.push_back("below_sampling_floor");
    }
    std::sort(result.table.flags.begin(), result.table.flags.end());
    result.table.flags.erase(std::unique(result.table.flags.begin(), result.table.flags.end()),
                             result.table.flags.end());
    result.table.finalize();
    return result;
}

}  // namespace peaklab
