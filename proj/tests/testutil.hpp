#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "sfb/fdata.hpp"
#include "sfb/rng.hpp"

namespace testutil {

inline sfb::SparseSampleSet from_csv(const std::string& text) {
  std::istringstream in(text);
  return sfb::ingest_long_csv(in).set;
}

// Constant univariate curves, one per level.
inline sfb::CompleteCurves constant_curves(const std::vector<double>& levels, int nc = 10) {
  sfb::CompleteCurves c(static_cast<int>(levels.size()), 1, sfb::Grid::equidistant(nc));
  for (int i = 0; i < c.n; ++i)
    for (int cg = 0; cg < nc; ++cg) c.at(i, 0, cg) = levels[static_cast<size_t>(i)];
  return c;
}

inline sfb::CompleteCurves random_curves(int n, int p, int nc, std::uint64_t seed,
                                         double scale = 1.0) {
  sfb::CompleteCurves c(n, p, sfb::Grid::equidistant(nc));
  sfb::rng::Engine gen = sfb::rng::make_engine(seed);
  for (double& v : c.v) v = scale * sfb::rng::normal(gen);
  return c;
}

}  // namespace testutil
