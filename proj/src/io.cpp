#include "rfh/io.hpp"

#include <bit>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rfh {

static_assert(std::endian::native == std::endian::little,
              "state container assumes a little-endian host");

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path, std::ios::binary);  // binary: no platform newline games
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c) out << ',';
    out << header[c];
  }
  out << '\n';
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw std::invalid_argument("csv row width does not match the header");
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ',';
      out << format_double(row[c]);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<std::vector<double>> read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open csv: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty csv: " + path);
  std::vector<std::vector<double>> rows;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      std::size_t pos = 0;
      double v;
      try {
        v = std::stod(cell, &pos);
      } catch (const std::exception&) {
        throw std::invalid_argument("non-numeric csv cell in " + path + ": " + cell);
      }
      while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos])))
        ++pos;
      if (pos != cell.size())
        throw std::invalid_argument("non-numeric csv cell in " + path + ": " + cell);
      row.push_back(v);
    }
    if (width == 0) width = row.size();
    if (row.size() != width)
      throw std::invalid_argument("ragged csv rows in " + path);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open json: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("json parse error in " + path + ": " + e.what());
  }
  return j;
}

void write_symbol(const std::string& csv_path, const std::string& meta_path,
                  const ResponseSymbol& s) {
  std::vector<std::vector<double>> rows;
  rows.reserve(s.tau_grid.size() * s.k_grid.size());
  for (std::size_t i = 0; i < s.tau_grid.size(); ++i)
    for (std::size_t j = 0; j < s.k_grid.size(); ++j) {
      const SymbolPoint& p = s.at(i, j);
      rows.push_back({s.tau_grid[i], s.k_grid[j], p.value.real(), p.value.imag(),
                      p.err, p.flagged ? 1.0 : 0.0});
    }
  write_csv(csv_path, {"tau", "k", "re", "im", "err", "flagged"}, rows);
  json meta;
  meta["dim"] = s.dim;
  meta["distribution"] = s.dist_desc;
  meta["tau_grid"] = s.tau_grid;
  meta["k_grid"] = s.k_grid;
  meta["flagged_count"] = s.flagged_count();
  meta["options"] = {{"eta0", s.opt.eta0},
                     {"t_factor", s.opt.t_factor},
                     {"flag_rel_tol", s.opt.flag_rel_tol},
                     {"quad_abs_tol", s.opt.quad.abs_tol},
                     {"quad_max_intervals", s.opt.quad.max_intervals},
                     {"profile_r_max", s.opt.profile_r_max},
                     {"profile_n", s.opt.profile_n}};
  write_json(meta_path, meta);
}

void write_density_path(const std::string& path, const SpectralGrid& grid,
                        const DensityPath& dp) {
  std::vector<std::string> header{"t"};
  const char* axes[3] = {"x0", "x1", "x2"};
  for (int a = 0; a < grid.dim; ++a) header.push_back(axes[a]);
  header.push_back("rho");
  header.push_back("V");
  const std::size_t npts = grid.size();
  std::vector<std::vector<double>> rows;
  rows.reserve(dp.times.size() * npts);
  const double dx = grid.dx();
  for (std::size_t i = 0; i < dp.times.size(); ++i) {
    for (std::size_t p = 0; p < npts; ++p) {
      std::vector<double> row;
      row.reserve(header.size());
      row.push_back(dp.times[i]);
      std::size_t rest = p;
      std::size_t coord[3] = {0, 0, 0};
      for (int a = grid.dim - 1; a >= 0; --a) {
        coord[a] = rest % grid.N;
        rest /= grid.N;
      }
      for (int a = 0; a < grid.dim; ++a)
        row.push_back(dx * static_cast<double>(coord[a]));
      row.push_back(dp.rho[i][p]);
      row.push_back(i < dp.V.size() ? dp.V[i][p] : 0.0);
      rows.push_back(std::move(row));
    }
  }
  write_csv(path, header, rows);
}

void write_cauchy(const std::string& path, const ScatterDiagnostics& d) {
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < d.times.size(); ++i)
    for (std::size_t j = i + 1; j < d.times.size(); ++j)
      rows.push_back({static_cast<double>(i), static_cast<double>(j), d.times[i],
                      d.times[j], d.cauchy[i][j]});
  write_csv(path, {"i", "j", "t_i", "t_j", "cauchy"}, rows);
}

namespace {
constexpr char kMagic[4] = {'R', 'F', 'H', 'S'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T get(std::ifstream& in) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw std::invalid_argument("truncated state container");
  return v;
}

void put_field(std::ofstream& out, const std::vector<cplx>& f) {
  for (const cplx& c : f) {
    put(out, c.real());
    put(out, c.imag());
  }
}

void get_field(std::ifstream& in, std::vector<cplx>& f) {
  for (cplx& c : f) {
    const double re = get<double>(in);
    const double im = get<double>(in);
    c = cplx(re, im);
  }
}
}  // namespace

void save_state(const std::string& path, const RandomFieldState& state) {
  state.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(kMagic, 4);
  put(out, kVersion);
  put(out, static_cast<std::int32_t>(state.grid.dim));
  put(out, static_cast<std::uint64_t>(state.grid.N));
  put(out, state.grid.L);
  put(out, state.m);
  put(out, state.t);
  put(out, static_cast<std::uint64_t>(state.modes.size()));
  put(out, static_cast<std::uint64_t>(state.extra.size()));
  for (std::size_t k = 0; k < state.modes.size(); ++k) {
    const Mode& mode = state.modes.modes[k];
    put(out, mode.xi[0]);
    put(out, mode.xi[1]);
    put(out, mode.xi[2]);
    put(out, mode.f);
    put_field(out, state.z[k]);
  }
  for (const auto& e : state.extra) put_field(out, e);
  if (!out) throw std::runtime_error("write failed: " + path);
}

RandomFieldState load_state(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open state container: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != std::string(kMagic, 4))
    throw std::invalid_argument("not a state container: " + path);
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion)
    throw std::invalid_argument("unsupported state container version");
  const auto dim = get<std::int32_t>(in);
  const auto N = get<std::uint64_t>(in);
  const auto L = get<double>(in);
  const auto m = get<double>(in);
  const auto t = get<double>(in);
  const auto n_modes = get<std::uint64_t>(in);
  const auto n_extra = get<std::uint64_t>(in);
  SpectralGrid grid = SpectralGrid::make(dim, static_cast<std::size_t>(N), L);
  ModeSet modes;
  modes.dim = dim;
  modes.modes.resize(n_modes);
  RandomFieldState state;
  state.grid = grid;
  state.m = m;
  state.t = t;
  state.z.assign(n_modes, std::vector<cplx>(grid.size()));
  for (std::uint64_t k = 0; k < n_modes; ++k) {
    Mode& mode = modes.modes[k];
    mode.xi[0] = get<double>(in);
    mode.xi[1] = get<double>(in);
    mode.xi[2] = get<double>(in);
    mode.f = get<double>(in);
    get_field(in, state.z[k]);
  }
  state.modes = std::move(modes);
  state.extra.assign(n_extra, std::vector<cplx>(grid.size()));
  for (std::uint64_t j = 0; j < n_extra; ++j) get_field(in, state.extra[j]);
  state.validate();
  return state;
}

}  // namespace rfh
