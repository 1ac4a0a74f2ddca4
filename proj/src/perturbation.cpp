#include "sir/perturbation.hpp"

#include <cmath>

#include "sir/error.hpp"

namespace sir {

namespace {

void check_case(const PerturbationCase& c) {
  if (c.id < 1 || c.id > 4) throw ConfigError("perturbation case must be 1, 2, 3 or 4, got " + std::to_string(c.id));
  if (!(c.rate > 0.0) || !std::isfinite(c.rate)) throw ConfigError("perturbation rate must be positive");
}

}  // namespace

double case_multiplier(const QueryRecord& q, const PerturbationCase& c) {
  check_case(c);
  switch (c.id) {
    case 1: return static_cast<double>(q.num_nights);
    case 2: return q.exchange_rate;
    case 3: return static_cast<double>(q.num_nights) * q.exchange_rate;
    default: return c.rate;
  }
}

Dataset apply_case(const Dataset& ds, const FeatureSchema& schema, const PerturbationCase& c) {
  check_case(c);
  std::vector<std::size_t> targets;
  for (const auto& name : c.targets) targets.push_back(schema.scalevariant_index(name));

  Dataset out = ds;
  for (auto& q : out) {
    const double nights = static_cast<double>(q.num_nights);
    for (auto& item : q.items) {
      for (std::size_t k : targets) {
        double& v = item.scalevariant[k];
        // Case 3 is applied as Case 1 followed by Case 2 so that it equals
        // the composition of the two exactly.
        switch (c.id) {
          case 1: v *= nights; break;
          case 2: v *= q.exchange_rate; break;
          case 3: v = (v * nights) * q.exchange_rate; break;
          default: v *= c.rate; break;
        }
      }
    }
  }
  return out;
}

}  // namespace sir
