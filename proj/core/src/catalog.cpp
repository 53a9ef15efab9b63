#include "relqm/catalog.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace relqm {

namespace {

struct FamilyRanges {
  double r_min, r_max;          // centre radius
  double width_min, width_max;  // Gaussian width
  double offset_max;            // |position offset|, in units of 1/scale
  double polar_min, polar_max;  // polar angle of the centre, radians
};

FamilyRanges ranges(CatalogFamily f) {
  constexpr double pi = std::numbers::pi;
  switch (f) {
    case CatalogFamily::massive: return {0.5, 1.5, 1.1, 1.4, 0.35, 0.0, pi};
    case CatalogFamily::massless: return {2.5, 3.0, 0.8, 0.9, 0.35, 0.0, pi};
    case CatalogFamily::massless_axis_free:
      return {2.6, 3.0, 0.8, 0.9, 0.35, 0.4 * pi, 0.6 * pi};
  }
  return {};
}

std::string describe(const PacketSpec& s) {
  std::ostringstream os;
  os.precision(4);
  os << "gauss(c=(" << s.center[0] << "," << s.center[1] << "," << s.center[2]
     << "),w=" << s.width << ",x=(" << s.offset[0] << "," << s.offset[1] << "," << s.offset[2]
     << ")";
  if (s.symmetry == PacketSymmetry::even) os << ",even";
  if (s.symmetry == PacketSymmetry::odd) os << ",odd";
  os << ")";
  return os.str();
}

}  // namespace

std::string family_name(CatalogFamily family) {
  switch (family) {
    case CatalogFamily::massive: return "massive";
    case CatalogFamily::massless: return "massless";
    case CatalogFamily::massless_axis_free: return "massless_axis_free";
  }
  return "unknown";
}

CatalogFamily default_family(const MomentumGrid& grid, bool avoid_axis) {
  if (grid.mass() > 0.0) return CatalogFamily::massive;
  return avoid_axis ? CatalogFamily::massless_axis_free : CatalogFamily::massless;
}

std::vector<PacketSpec> catalog_specs(CatalogFamily family, double p_max, double mass,
                                      const CatalogOptions& options) {
  // Ranges are tuned for p_max = 6 (times mu when massive) and scale with p_max.
  (void)mass;
  const double scale = p_max / 6.0;
  const FamilyRanges r = ranges(family);
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  constexpr double pi = std::numbers::pi;

  auto direction = [&](double polar_min, double polar_max) {
    const double cmin = std::cos(polar_max), cmax = std::cos(polar_min);
    const double c = cmin + (cmax - cmin) * unit(rng);
    const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
    const double az = 2.0 * pi * unit(rng);
    return Vec3{s * std::cos(az), s * std::sin(az), c};
  };

  std::vector<PacketSpec> specs;
  for (int i = 0; i < options.profiles; ++i) {
    PacketSpec s;
    const double radius = (r.r_min + (r.r_max - r.r_min) * unit(rng)) * scale;
    const Vec3 d = direction(r.polar_min, r.polar_max);
    for (int j = 0; j < 3; ++j) s.center[j] = radius * d[j];
    s.width = (r.width_min + (r.width_max - r.width_min) * unit(rng)) * scale;
    const double off = r.offset_max * unit(rng) / scale;
    const Vec3 e = direction(0.0, pi);
    for (int j = 0; j < 3; ++j) s.offset[j] = off * e[j];
    specs.push_back(s);
  }
  // Parity-symmetrized variants only make sense when p and -p are both
  // admissible, i.e. for families without a polar restriction.
  if (options.symmetrized && !specs.empty() && family == CatalogFamily::massive) {
    PacketSpec even = specs.front();
    even.symmetry = PacketSymmetry::even;
    PacketSpec odd = specs.front();
    odd.symmetry = PacketSymmetry::odd;
    specs.push_back(even);
    specs.push_back(odd);
  }
  return specs;
}

SampleSet gaussian_catalog(const std::vector<PacketSpec>& specs, const MomentumGrid& grid) {
  SampleSet out;
  const double r = 1.0 / std::numbers::sqrt2;
  for (const auto& base : specs) {
    if (grid.blocks() == 1) {
      PacketSpec s = base;
      s.block_weights = {1.0};
      out.push_back({describe(s), gaussian_packet(grid, s)});
      continue;
    }
    const std::vector<std::vector<cplx>> placements = {{1.0, 0.0}, {0.0, 1.0}, {r, r}};
    const char* names[] = {"block1", "block2", "mixed"};
    for (std::size_t k = 0; k < placements.size(); ++k) {
      PacketSpec s = base;
      s.block_weights = placements[k];
      out.push_back({describe(s) + "@" + names[k], gaussian_packet(grid, s)});
    }
  }
  return out;
}

SampleSet gaussian_catalog(const MomentumGrid& grid, CatalogFamily family,
                           const CatalogOptions& options) {
  return gaussian_catalog(catalog_specs(family, grid.p_max(), grid.mass(), options), grid);
}

}  // namespace relqm
