#include "m3/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace m3 {

Observations Observations::scaled(double factor) const {
  if (!(factor > 0.0)) throw InvalidArgument("scale factor must be positive");
  Observations out = *this;
  for (double& v : out.values_) v *= factor;
  return out;
}

Observations canonicalize_observations(std::span<const double> sites,
                                       std::span<const double> values) {
  if (sites.size() != values.size()) {
    throw InvalidArgument("sites and values differ in length");
  }
  if (sites.empty()) throw InvalidArgument("at least one observation is required");

  std::vector<std::size_t> order(sites.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sites[a] < sites[b]; });

  Observations obs;
  for (std::size_t k : order) {
    if (!std::isfinite(sites[k])) throw InvalidArgument("non-finite site");
    if (!(values[k] > 0.0) || !std::isfinite(values[k])) {
      std::ostringstream os;
      os << "observation " << k << " has non-positive value " << values[k];
      throw NonPositiveValueError(os.str());
    }
    if (!obs.sites_.empty() && obs.sites_.back() == sites[k]) {
      std::ostringstream os;
      os << "duplicate site " << sites[k];
      throw DuplicateSiteError(os.str());
    }
    obs.sites_.push_back(sites[k]);
    obs.values_.push_back(values[k]);
    obs.original_.push_back(k);
  }
  return obs;
}

}  // namespace m3
