#pragma once

#include <string>

#include "pks/fv.hpp"
#include "pks/jko.hpp"

namespace pks {

enum class SolverKind { Jko, Fv };

/// Parsed run configuration. Format: line-oriented `key = value` under
/// `[section]` headers, `#` comments, comma-separated lists. See README for
/// the grammar. Parsing is total: unknown keys or malformed lines raise a
/// ConfigError carrying the line number.
struct RunConfig {
    // [grid]
    double L = 0.0;
    int N = 0;
    // [species]: either beta directly, or the two-species (chi, beta_tilde) form
    int n = 1;
    std::vector<double> beta;
    std::vector<double> chi;         // empty unless two-species form
    std::vector<double> beta_tilde;  // empty unless two-species form
    // [interaction]
    Eigen::MatrixXd interaction;     // empty when the chi form is used
    // [profile_i]
    std::vector<SpeciesProfile> profiles;
    // [solver]
    SolverKind kind = SolverKind::Jko;
    JkoConfig jko;
    FvConfig fv;
    // [run]
    double horizon = 0.0;
    int snapshot_every = 0;
    bool snapshots_raw = false;
    bool heatmaps = false;
    std::string out_dir = "out";
    std::uint64_t seed = 0;

    InteractionMatrix matrix() const;
    std::vector<double> masses() const;
    DensityField initial_state(const GridSpec& grid) const;
    GridSpec grid() const { return make_grid(L, N); }
};

RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<text>");

/// Serializes a RunConfig back to the config grammar (round-trip stable).
std::string emit_config(const RunConfig& cfg);

}  // namespace pks
