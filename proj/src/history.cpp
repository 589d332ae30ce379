#include "dpl/history.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace dpl {

void History::append(const Observation& observation) {
  if (observation.budget < 1) throw std::invalid_argument("History: budget must be >= 1");
  if (!std::isfinite(observation.loss)) throw std::invalid_argument("History: loss must be finite");
  auto it = max_budget_.find(observation.config_id);
  if (it == max_budget_.end()) {
    max_budget_.emplace(observation.config_id, observation.budget);
    config_order_.push_back(observation.config_id);
  } else {
    if (observation.budget <= it->second) {
      throw std::invalid_argument("History: config " + std::to_string(observation.config_id) +
                                  " already observed at budget " + std::to_string(it->second));
    }
    it->second = observation.budget;
  }
  observations_.push_back(observation);
}

std::optional<int> History::max_budget(ConfigId id) const {
  auto it = max_budget_.find(id);
  if (it == max_budget_.end()) return std::nullopt;
  return it->second;
}

}  // namespace dpl
