#include "effectmap/pci.hpp"

#include "effectmap/error.hpp"

#include <algorithm>
#include <cmath>

namespace effectmap {

std::string_view pci_mode_name(PciMode mode) { return mode == PciMode::uniform ? "uniform" : "weighted"; }

PciMatrix pci_matrix(const EffectTable& table, std::size_t j, std::size_t k, PciMode mode,
                     const ReferenceDistribution* reference) {
  const std::size_t d = table.dimension();
  if (j >= d || k >= d || j == k) throw Error(Errc::invalid_argument, "invalid factor pair");
  PciMatrix out;
  out.j = j;
  out.k = k;
  out.mode = mode;
  const Eigen::MatrixXd g = table.pair_matrix(j, k);
  if (mode == PciMode::uniform) {
    out.scale = std::sqrt(g.squaredNorm() / static_cast<double>(g.size()));
  } else {
    if (reference == nullptr) throw Error(Errc::invalid_argument, "weighted mode needs a reference distribution");
    const Eigen::MatrixXd w = reference->joint(j, k);
    out.scale = std::sqrt((w.array() * g.array().square()).sum());
  }
  out.values = out.scale > 0.0 ? Eigen::MatrixXd(g / out.scale) : Eigen::MatrixXd::Zero(g.rows(), g.cols());
  return out;
}

std::vector<PairStrength> pci_rank_pairs(const EffectTable& table) {
  const FactorSpace& space = table.space;
  if (space.pair_count() == 0) throw Error(Errc::invalid_argument, "table has no factor pairs");
  std::vector<PairStrength> out;
  for (std::size_t p = 0; p < space.pair_count(); ++p) {
    auto [j, k] = space.pair_factors(p);
    const auto& g = table.pairs[p];
    out.push_back({j, k, space.pair_name(p), std::sqrt(g.squaredNorm() / static_cast<double>(g.size()))});
  }
  std::stable_sort(out.begin(), out.end(), [](const PairStrength& a, const PairStrength& b) {
    return a.scale > b.scale || (a.scale == b.scale && a.name < b.name);
  });
  return out;
}

}  // namespace effectmap
