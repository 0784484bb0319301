#pragma once

#include <cstddef>
#include <vector>

namespace cpmspec {

// Gauss-Legendre nodes and weights on [0, 1].
struct GaussLegendre {
  explicit GaussLegendre(int order);
  std::vector<double> nodes;
  std::vector<double> weights;
};

}  // namespace cpmspec
