#include "rfh/norms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "rfh/errors.hpp"

namespace rfh {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

std::string strip_spaces(const std::string& s) {
  std::string out;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) out += c;
  return out;
}

double parse_exponent(const std::string& s, const char* what) {
  if (s == "inf") return kInf;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument(std::string("norm spec: bad ") + what + " '" + s + "'");
  }
  if (used != s.size() || !(v >= 1.0))
    throw std::invalid_argument(std::string("norm spec: ") + what +
                                " must be a number >= 1 or 'inf', got '" + s + "'");
  return v;
}

double parse_sigma(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("norm spec: bad Sobolev order '" + s + "'");
  }
  if (used != s.size() || !std::isfinite(v))
    throw std::invalid_argument("norm spec: Sobolev order must be finite, got '" + s + "'");
  return v;
}

std::string format_number(double v) {
  if (v == kInf) return "inf";
  std::ostringstream os;
  os << v;
  return os.str();
}

SpatialNormSpec parse_inner(const std::string& inner) {
  SpatialNormSpec sp;
  if (inner.rfind("Hsdot(", 0) == 0 && inner.back() == ')') {
    sp.kind = SpaceNormKind::Hsdot;
    sp.sigma = parse_sigma(inner.substr(6, inner.size() - 7));
    return sp;
  }
  if (inner.rfind("Hs(", 0) == 0 && inner.back() == ')') {
    sp.kind = SpaceNormKind::Hs;
    sp.sigma = parse_sigma(inner.substr(3, inner.size() - 4));
    return sp;
  }
  if (!inner.empty() && inner[0] == 'L') {
    const std::string q = inner.substr(1);
    if (q == "inf") {
      sp.kind = SpaceNormKind::Linf;
      return sp;
    }
    sp.q = parse_exponent(q, "spatial exponent");
    sp.kind = sp.q == 2.0 ? SpaceNormKind::L2 : SpaceNormKind::Lq;
    return sp;
  }
  throw std::invalid_argument("norm spec: unrecognized spatial norm '" + inner + "'");
}
}  // namespace

NormSpec NormSpec::parse(const std::string& text) {
  const std::string s = strip_spaces(text);
  const auto colon = s.find(':');
  if (colon == std::string::npos)
    throw std::invalid_argument("norm spec: expected 'L<p>t:<spatial>', got '" + text + "'");
  const std::string outer = s.substr(0, colon);
  if (outer.size() < 3 || outer.front() != 'L' || outer.back() != 't')
    throw std::invalid_argument("norm spec: time part must look like 'L2t' or 'Linft', got '" +
                                outer + "'");
  NormSpec spec;
  spec.time_p = parse_exponent(outer.substr(1, outer.size() - 2), "time exponent");
  spec.space = parse_inner(s.substr(colon + 1));
  return spec;
}

std::string NormSpec::str() const {
  std::string out = "L" + format_number(time_p) + "t:";
  switch (space.kind) {
    case SpaceNormKind::L2:
      out += "L2";
      break;
    case SpaceNormKind::Linf:
      out += "Linf";
      break;
    case SpaceNormKind::Lq:
      out += "L" + format_number(space.q);
      break;
    case SpaceNormKind::Hs:
      out += "Hs(" + format_number(space.sigma) + ")";
      break;
    case SpaceNormKind::Hsdot:
      out += "Hsdot(" + format_number(space.sigma) + ")";
      break;
  }
  return out;
}

namespace {
void guard_mean_zero(const std::vector<cplx>& coeff) {
  double rest = 0.0;
  for (std::size_t i = 1; i < coeff.size(); ++i) rest += std::norm(coeff[i]);
  if (std::abs(coeff[0]) > 1e-8 * std::sqrt(rest))
    throw numerical_guard_error(
        "homogeneous norm of negative order needs mean-zero input on the torus "
        "(report the mean separately)");
}
}  // namespace

std::vector<cplx> frac_deriv(const SpectralGrid& grid, const std::vector<cplx>& u,
                             double sigma, bool homogeneous) {
  if (u.size() != grid.size())
    throw std::invalid_argument("frac_deriv: field/grid size mismatch");
  if (sigma == 0.0) return u;
  std::vector<cplx> work = u;
  grid.to_coeff(work);
  if (homogeneous && sigma < 0.0) guard_mean_zero(work);
  for (std::size_t flat = 0; flat < work.size(); ++flat) {
    const double xi_sq = grid.xi_sq_at(flat);
    double mult;
    if (homogeneous) {
      mult = xi_sq == 0.0 ? 0.0 : std::pow(xi_sq, 0.5 * sigma);
    } else {
      mult = std::pow(1.0 + xi_sq, 0.5 * sigma);
    }
    work[flat] *= mult;
  }
  grid.to_phys(work);
  return work;
}

double spatial_norm(const SpectralGrid& grid, const std::vector<cplx>& u,
                    const SpatialNormSpec& spec) {
  if (u.size() != grid.size())
    throw std::invalid_argument("spatial_norm: field/grid size mismatch");
  switch (spec.kind) {
    case SpaceNormKind::Linf: {
      double mx = 0.0;
      for (const auto& v : u) mx = std::max(mx, std::abs(v));
      return mx;
    }
    case SpaceNormKind::L2: {
      double s = 0.0;
      for (const auto& v : u) s += std::norm(v);
      return std::sqrt(grid.cell() * s);
    }
    case SpaceNormKind::Lq: {
      if (spec.q == kInf) {
        double mx = 0.0;
        for (const auto& v : u) mx = std::max(mx, std::abs(v));
        return mx;
      }
      double s = 0.0;
      for (const auto& v : u) s += std::pow(std::abs(v), spec.q);
      return std::pow(grid.cell() * s, 1.0 / spec.q);
    }
    case SpaceNormKind::Hs:
    case SpaceNormKind::Hsdot: {
      std::vector<cplx> coeff = u;
      grid.to_coeff(coeff);
      const bool hom = spec.kind == SpaceNormKind::Hsdot;
      if (hom && spec.sigma < 0.0) guard_mean_zero(coeff);
      double s = 0.0;
      for (std::size_t flat = 0; flat < coeff.size(); ++flat) {
        const double xi_sq = grid.xi_sq_at(flat);
        double mult;
        if (hom && spec.sigma != 0.0) {
          mult = xi_sq == 0.0 ? 0.0 : std::pow(xi_sq, spec.sigma);
        } else if (hom) {
          mult = 1.0;
        } else {
          mult = std::pow(1.0 + xi_sq, spec.sigma);
        }
        s += mult * std::norm(coeff[flat]);
      }
      return std::sqrt(grid.volume() * s);
    }
  }
  throw std::logic_error("spatial_norm: unreachable");
}

double mixed_norm(const SpectralGrid& grid,
                  const std::vector<std::vector<cplx>>& snapshots, double dt,
                  const NormSpec& spec) {
  if (snapshots.empty()) throw std::invalid_argument("mixed_norm: empty path");
  std::vector<double> s(snapshots.size());
  for (std::size_t i = 0; i < snapshots.size(); ++i)
    s[i] = spatial_norm(grid, snapshots[i], spec.space);
  if (spec.time_p == kInf) return *std::max_element(s.begin(), s.end());
  if (!(dt > 0.0)) throw std::invalid_argument("mixed_norm: dt must be > 0");
  double acc = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double w = (i == 0 || i + 1 == s.size()) ? 0.5 : 1.0;
    acc += w * std::pow(s[i], spec.time_p);
  }
  return std::pow(dt * acc, 1.0 / spec.time_p);
}

}  // namespace rfh
