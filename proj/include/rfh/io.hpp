#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "rfh/dynamics.hpp"
#include "rfh/fields.hpp"
#include "rfh/response.hpp"

namespace rfh {

using json = nlohmann::json;

// Shortest-faithful decimal form (%.17g): identical input bits give
// identical text, which is what makes CSV outputs byte-reproducible.
std::string format_double(double v);

// Header line then one row per entry, every cell through format_double.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

// Numeric CSV with exactly one header line. Blank lines are skipped; every
// data row must have the same number of columns.
std::vector<std::vector<double>> read_csv(const std::string& path);

void write_json(const std::string& path, const json& j);
json read_json(const std::string& path);

// Symbol tables persist as flat CSV (tau, k, re, im, err, flagged) plus a
// JSON sidecar carrying the grids and build metadata.
void write_symbol(const std::string& csv_path, const std::string& meta_path,
                  const ResponseSymbol& s);

// One row per (time, grid point): t, x coordinates, rho, V.
void write_density_path(const std::string& path, const SpectralGrid& grid,
                        const DensityPath& dp);

// Upper-triangle Cauchy table rows: i, j, t_i, t_j, value.
void write_cauchy(const std::string& path, const ScatterDiagnostics& d);

// Binary state container, little-endian doubles, fields row-major:
//   magic "RFHS", u32 version, i32 dim, u64 N, f64 L, f64 m, f64 t,
//   u64 n_modes, u64 n_extra, then per mode (xi[3], f, field re/im pairs),
//   then per extra field (re/im pairs).
void save_state(const std::string& path, const RandomFieldState& state);
RandomFieldState load_state(const std::string& path);

}  // namespace rfh
