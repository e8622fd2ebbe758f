#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "peaklab/attractor.hpp"
#include "peaklab/equilibria.hpp"
#include "peaklab/rate_fit.hpp"

namespace peaklab {

/// Shortest round-trip decimal form, so that outputs are byte-stable.
std::string fmt(double v);

/// Comma-separated table with a header row; rows are written on close.
class CsvWriter {
public:
    CsvWriter(std::filesystem::path path, std::vector<std::string> header);
    CsvWriter& row(const std::vector<std::string>& cells);
    void close();
    ~CsvWriter();

private:
    std::filesystem::path path_;
    std::size_t columns_;
    std::string buffer_;
    bool closed_ = false;
};

void write_text(const std::filesystem::path& path, const std::string& text);
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);
std::string read_text(const std::filesystem::path& path);

/// node_index, x, y (empty on the interval), value
void write_field_csv(const std::filesystem::path& path, const Field& u);
/// {vertices: [[x, y]], triangles: [[i, j, k]], boundary_edges: [[i, j, tag]]}
void write_mesh_json(const std::filesystem::path& path, const ThinMesh& mesh);
/// row col value, one entry per line, zero-based
void write_matrix_coo(const std::filesystem::path& path, const SparseMatrix& A);
/// eps, distance, norm_kind, mesh_h, flag [, theta_report]
void write_rate_csv(const std::filesystem::path& path, const RateTable& table, bool theta_column = false);
/// t, L2 or L2_a, H1_eps or H1_a, Linf [, energy]
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);
/// eps, pair_id, morse_index, distance_H1_eps, distance_L2, unique_in_ball, slope
void write_pairing_csv(const std::filesystem::path& path, const std::vector<PairingEntry>& entries);

/// Entry summaries plus one field CSV per entry named `<stem>_<i>.csv`.
nlohmann::json atlas_json(const EquilibriumAtlas& atlas, const OperatorPair& op, const std::string& field_stem);
/// Per-point provenance and norms with the sampling-density bound.
nlohmann::json attractor_json(const AttractorSample& sample, const OperatorPair& op);
nlohmann::json rate_json(const RateTable& table);

}  // namespace peaklab
