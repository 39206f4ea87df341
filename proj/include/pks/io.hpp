#pragma once

#include <string>

#include "pks/series.hpp"

namespace pks {

/// Writes the time series as CSV: '#' comment block with units, one header
/// row, then the fixed column order
///   t, mass_1..mass_n, com_x, com_y, m2, upsilon15, entropy, entropy_pos,
///   interaction, free_energy, dissipation, fisher, dw2_step, admissibility,
///   max_density, boundary_fraction, stop_reason
/// Floats carry 17 significant digits. The stop reason appears on the final
/// row only.
void emit_csv(const TimeSeries& series, const std::string& path);

/// Reads back a CSV produced by emit_csv (rows and stop reason only).
TimeSeries parse_csv(const std::string& path);

/// 8-bit grayscale PGM (P5), linear scale, per-file max in the comment line.
void emit_heatmap(const Field& field, const std::string& path);

/// Raw field file: magic "PKS1", then n, N as little-endian u64, L as f64,
/// then n*N^2 little-endian f64 in row-major, species-major order.
void write_raw_field(const DensityField& field, const std::string& path);
DensityField read_raw_field(const std::string& path);

}  // namespace pks
