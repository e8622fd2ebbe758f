#include "peaklab/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "peaklab/transfer.hpp"

namespace peaklab {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (v == 0.0) v = 0.0;  // no "-0"
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write '" + path.string() + "'");
    out << text;
}

void write_json(const fs::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot read '" + path.string() + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

CsvWriter::CsvWriter(fs::path path, std::vector<std::string> header)
    : path_(std::move(path)), columns_(header.size()) {
    row(header);
}

CsvWriter& CsvWriter::row(const std::vector<std::string>& cells) {
    require(cells.size() == columns_, "CsvWriter: row width differs from the header");
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) buffer_ += ',';
        buffer_ += cells[i];
    }
    buffer_ += '\n';
    return *this;
}

void CsvWriter::close() {
    if (closed_) return;
    closed_ = true;
    write_text(path_, buffer_);
}

CsvWriter::~CsvWriter() {
    try {
        close();
    } catch (...) {
    }
}

void write_field_csv(const fs::path& path, const Field& u) {
    CsvWriter csv(path, {"node_index", "x", "y", "value"});
    if (u.on_omega()) {
        const auto& verts = u.thin_mesh()->vertices();
        for (int i = 0; i < u.size(); ++i) {
            csv.row({std::to_string(i), fmt(verts[i].x), fmt(verts[i].y), fmt(u.values()[i])});
        }
    } else {
        const auto& nodes = u.interval_mesh()->nodes();
        for (int i = 0; i < u.size(); ++i) csv.row({std::to_string(i), fmt(nodes[i]), "", fmt(u.values()[i])});
    }
    csv.close();
}

void write_mesh_json(const fs::path& path, const ThinMesh& mesh) {
    json doc;
    json verts = json::array(), tris = json::array(), edges = json::array();
    for (const auto& v : mesh.vertices()) verts.push_back({v.x, v.y});
    for (const auto& t : mesh.triangles()) tris.push_back({t[0], t[1], t[2]});
    for (const auto& e : mesh.boundary_edges()) edges.push_back({e.a, e.b, static_cast<int>(e.tag)});
    doc["vertices"] = std::move(verts);
    doc["triangles"] = std::move(tris);
    doc["boundary_edges"] = std::move(edges);
    doc["boundary_tags"] = {{"top", 1}, {"bottom", 2}, {"right", 3}, {"left", 4}};
    write_json(path, doc);
}

void write_matrix_coo(const fs::path& path, const SparseMatrix& A) {
    std::string text = "% rows " + std::to_string(A.rows()) + " cols " + std::to_string(A.cols()) + "\n";
    for (int k = 0; k < A.outerSize(); ++k) {
        for (SparseMatrix::InnerIterator it(A, k); it; ++it) {
            text += std::to_string(it.row()) + ' ' + std::to_string(it.col()) + ' ' + fmt(it.value()) + '\n';
        }
    }
    write_text(path, text);
}

namespace {

std::string join(const std::vector<std::string>& parts, char sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

}  // namespace

void write_rate_csv(const fs::path& path, const RateTable& table, bool theta_column) {
    std::vector<std::string> header = {"eps", "distance", "norm_kind", "mesh_h", "slope", "r_squared", "flag"};
    if (theta_column) header.push_back("theta_report");
    CsvWriter csv(path, header);
    const std::string slope = table.fit ? fmt(table.fit->slope) : "";
    const std::string r2 = table.fit ? fmt(table.fit->r_squared) : "";
    const std::string flags = join(table.flags, ';');
    for (std::size_t i = 0; i < table.pairs.size(); ++i) {
        std::string flag = flags;
        if (table.pairs[i].second <= 10.0 * table.floor) flag += flag.empty() ? "below_floor" : ";below_floor";
        std::vector<std::string> cells = {fmt(table.pairs[i].first), fmt(table.pairs[i].second), table.norm_kind,
                                          i < table.mesh_h.size() ? fmt(table.mesh_h[i]) : "", slope, r2, flag};
        if (theta_column) {
            cells.push_back(table.fit && table.fit->theta_report ? fmt(*table.fit->theta_report) : "not_identifiable");
        }
        csv.row(cells);
    }
    csv.close();
}

void write_trajectory_csv(const fs::path& path, const Trajectory& traj) {
    const bool energy = traj.energy.size() == traj.times.size() && !traj.energy.empty();
    std::vector<std::string> header = {"t", traj.interval_side ? "L2_a" : "L2", traj.interval_side ? "H1_a" : "H1_eps",
                                       "Linf"};
    if (energy) header.push_back("energy");
    CsvWriter csv(path, header);
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        std::vector<std::string> cells = {fmt(traj.times[i]), fmt(traj.norm_x0[i]), fmt(traj.norm_x12[i]),
                                          fmt(traj.linf[i])};
        if (energy) cells.push_back(fmt(traj.energy[i]));
        csv.row(cells);
    }
    csv.close();
}

void write_pairing_csv(const fs::path& path, const std::vector<PairingEntry>& entries) {
    CsvWriter csv(path, {"eps", "pair_id", "morse_index", "distance_H1_eps", "distance_L2", "unique_in_ball", "slope"});
    for (const auto& e : entries) {
        const std::string slope = e.rate.fit ? fmt(e.rate.fit->slope) : "";
        for (std::size_t k = 0; k < e.eps.size(); ++k) {
            csv.row({fmt(e.eps[k]), std::to_string(e.limit_index),
                     k < e.morse_index.size() ? std::to_string(e.morse_index[k]) : "",
                     k < e.distance_x12.size() ? fmt(e.distance_x12[k]) : "",
                     k < e.distance_x0.size() ? fmt(e.distance_x0[k]) : "",
                     k < e.unique_in_ball.size() ? (e.unique_in_ball[k] ? "1" : "0") : "", slope});
        }
    }
    csv.close();
}

json atlas_json(const EquilibriumAtlas& atlas, const OperatorPair& op, const std::string& field_stem) {
    json entries = json::array();
    for (std::size_t i = 0; i < atlas.entries.size(); ++i) {
        const Equilibrium& e = atlas.entries[i];
        const NormKind x0 = space_norm(op.on_omega(), 0.0);
        const NormKind x12 = space_norm(op.on_omega(), 0.5);
        json spectrum = json::array();
        for (double v : e.spectrum.values) spectrum.push_back(v);
        entries.push_back({{"index", i},
                           {"morse_index", e.morse_index},
                           {"gap", e.gap},
                           {"hyperbolic", e.hyperbolic},
                           {"residual", e.residual},
                           {"constant", e.is_constant()},
                           {"spectrum", spectrum},
                           {"norm_summary",
                            {{std::string(to_string(x0)), norm(e.state, x0, op)},
                             {std::string(to_string(x12)), norm(e.state, x12, op)},
                             {"Linf", e.state.values().cwiseAbs().maxCoeff()}}},
                           {"field_ref", field_stem + "_" + std::to_string(i) + ".csv"}});
    }
    json notes = json::array();
    for (const auto& n : atlas.notes) notes.push_back(n);
    return {{"entries", entries}, {"solves", atlas.solves}, {"budget_exhausted", atlas.budget_exhausted},
            {"notes", notes}};
}

json attractor_json(const AttractorSample& sample, const OperatorPair& op) {
    json points = json::array();
    for (std::size_t i = 0; i < sample.points.size(); ++i) {
        const SamplePoint& p = sample.points[i];
        points.push_back({{"index", i},
                          {"provenance", p.provenance},
                          {"source", p.source},
                          {"ray", p.ray},
                          {"t", p.t},
                          {"norm", norm(p.state, sample.kind, op)},
                          {"Linf", p.state.values().cwiseAbs().maxCoeff()}});
    }
    json flags = json::array();
    for (const auto& f : sample.flags) flags.push_back(f);
    return {{"space", sample.space_tag},
            {"norm_kind", std::string(to_string(sample.kind))},
            {"sampling_density", sample.sampling_density},
            {"equilibria", sample.equilibria},
            {"rays", sample.rays},
            {"incomplete", sample.incomplete},
            {"flags", flags},
            {"points", points}};
}

json rate_json(const RateTable& table) {
    json pairs = json::array();
    for (const auto& [e, d] : table.pairs) pairs.push_back({e, d});
    json flags = json::array();
    for (const auto& f : table.flags) flags.push_back(f);
    json doc = {{"name", table.name}, {"norm_kind", table.norm_kind}, {"pairs", pairs},
                {"floor", table.floor}, {"flags", flags}};
    if (table.fit) {
        doc["slope"] = table.fit->slope;
        doc["intercept"] = table.fit->intercept;
        doc["r_squared"] = table.fit->r_squared;
    } else {
        doc["slope"] = nullptr;
    }
    return doc;
}

}  // namespace peaklab
