#pragma once

#include <vector>

namespace bohm {

struct GaussLegendreRule {
  std::vector<double> nodes;    // on [-1, 1], ascending
  std::vector<double> weights;
};

/// Golub-Welsch construction; exact for polynomials of degree 2n-1.
GaussLegendreRule gaussLegendre(int n);

} // namespace bohm
