#pragma once

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

namespace dpl {

using ConfigId = std::int64_t;

struct Observation {
  ConfigId config_id = 0;
  int budget = 0;  // steps, 1-based
  double loss = 0.0;

  friend bool operator==(const Observation&, const Observation&) = default;
};

/// Append-only record of (config, budget, loss). Per config, budgets must
/// arrive strictly increasing; losses must be finite.
class History {
 public:
  /// Throws std::invalid_argument when an invariant would break.
  void append(const Observation& observation);

  const std::vector<Observation>& observations() const { return observations_; }
  std::size_t size() const { return observations_.size(); }
  bool empty() const { return observations_.empty(); }
  const Observation& back() const { return observations_.back(); }

  bool contains(ConfigId id) const { return max_budget_.contains(id); }
  /// Largest budget observed for `id`, if any.
  std::optional<int> max_budget(ConfigId id) const;
  /// Distinct configs in order of first appearance.
  const std::vector<ConfigId>& configs() const { return config_order_; }

 private:
  std::vector<Observation> observations_;
  std::unordered_map<ConfigId, int> max_budget_;
  std::vector<ConfigId> config_order_;
};

}  // namespace dpl
