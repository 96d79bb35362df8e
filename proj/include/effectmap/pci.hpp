#pragma once

#include "effectmap/design_space.hpp"
#include "effectmap/effect_table.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace effectmap {

enum class PciMode { uniform, weighted };

std::string_view pci_mode_name(PciMode mode);

struct PciMatrix {
  std::size_t j = 0;
  std::size_t k = 0;
  Eigen::MatrixXd values;  // rows index factor j
  double scale = 0.0;      // s_jk
  PciMode mode = PciMode::uniform;
};

// Weighted mode needs the cell weights of the reference.
PciMatrix pci_matrix(const EffectTable& table, std::size_t j, std::size_t k, PciMode mode = PciMode::uniform,
                     const ReferenceDistribution* reference = nullptr);

struct PairStrength {
  std::size_t j = 0;
  std::size_t k = 0;
  std::string name;
  double scale = 0.0;
};

// Descending by RMS strength, ties by pair name.
std::vector<PairStrength> pci_rank_pairs(const EffectTable& table);

}  // namespace effectmap
