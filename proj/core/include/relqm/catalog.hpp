#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "relqm/grid.hpp"
#include "relqm/opcalc.hpp"

namespace relqm {

/// Families of catalog packets. Parameters are in units of the mass for
/// massive grids and in absolute momentum units for massless grids.
enum class CatalogFamily {
  /// Centres near the origin, for mu > 0.
  massive,
  /// Centres away from the origin (p0 = |p| is not smooth there).
  massless,
  /// As massless, and additionally away from the p3 axis where the
  /// helicity terms are singular.
  massless_axis_free,
};

struct CatalogOptions {
  std::uint64_t seed = 20240607;
  int profiles = 4;
  /// Add an even and an odd symmetrized variant of the first profile.
  bool symmetrized = true;
};

/// Packet specs of the catalog; they depend on the lattice only through
/// p_max and mu, so the same continuum states are sampled at every n.
std::vector<PacketSpec> catalog_specs(CatalogFamily family, double p_max, double mass,
                                      const CatalogOptions& options = {});
/// The default family for a grid: massive for mu > 0, else massless.
CatalogFamily default_family(const MomentumGrid& grid, bool avoid_axis);

/// Samples on a grid. On two-block grids every profile appears on block 1,
/// on block 2 and as an equal superposition.
SampleSet gaussian_catalog(const MomentumGrid& grid, CatalogFamily family,
                           const CatalogOptions& options = {});
SampleSet gaussian_catalog(const std::vector<PacketSpec>& specs, const MomentumGrid& grid);

std::string family_name(CatalogFamily family);

}  // namespace relqm
