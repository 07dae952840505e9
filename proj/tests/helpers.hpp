#pragma once

#include "nilgeo/experiments.hpp"

#include <doctest.h>

namespace testing {

using namespace nilgeo;

inline const SubRiemannianStructure& spec(const std::string& name) {
  static std::map<std::string, LoadedSpec> cache;
  auto it = cache.find(name);
  if (it == cache.end()) it = cache.emplace(name, load_spec(name)).first;
  return *it->second.structure;
}

inline Vec v(std::initializer_list<double> xs) {
  Vec r(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) r(i++) = x;
  return r;
}

inline double sup(const Vec& x) { return x.cwiseAbs().maxCoeff(); }

inline const double kTwoSqrtPi = 2.0 * std::sqrt(kPi);

}  // namespace testing
