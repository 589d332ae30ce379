#include "dpl/baselines.hpp"

#include <algorithm>
#include <optional>
#include <set>
#include <stdexcept>

#include "dpl/rng.hpp"

namespace dpl {

namespace {

void require_eta(int eta) {
  if (eta < 2) throw std::invalid_argument("eta must be >= 2");
}

/// Untried configs in a seeded random order.
class ConfigSampler {
 public:
  ConfigSampler(const BenchmarkTable& table, std::uint64_t seed) {
    order_.reserve(table.size());
    for (const auto& c : table.configs()) order_.push_back(c.id);
    Rng rng(derive_seed(seed, 0));
    shuffle(order_, rng);
  }

  bool empty() const { return next_ == order_.size(); }
  std::size_t remaining() const { return order_.size() - next_; }
  ConfigId take() { return order_.at(next_++); }

 private:
  std::vector<ConfigId> order_;
  std::size_t next_ = 0;
};

const char* kNoConfigsLeft = "every configuration has been sampled";

/// Sorts by (loss at `budget`, id) and keeps the first `keep`.
std::vector<ConfigId> top_k(const BenchmarkTable& table, std::vector<ConfigId> ids, int budget,
                            std::size_t keep) {
  const auto step = static_cast<std::size_t>(budget);
  std::sort(ids.begin(), ids.end(), [&](ConfigId a, ConfigId b) {
    const double la = table.config(a).curve.at_step(step);
    const double lb = table.config(b).curve.at_step(step);
    return la < lb || (la == lb && a < b);
  });
  ids.resize(std::min(keep, ids.size()));
  return ids;
}

/// One SH bracket; stops early if the budget runs out.
void run_bracket(EvaluationSession& session, std::vector<ConfigId> cohort,
                 const std::vector<int>& rungs, int eta) {
  for (std::size_t r = 0; r < rungs.size(); ++r) {
    for (ConfigId id : cohort) {
      if (session.exhausted()) return;
      session.advance(id, rungs[r]);
    }
    if (r + 1 == rungs.size() || session.exhausted()) return;
    const auto keep = std::max<std::size_t>(1, cohort.size() / static_cast<std::size_t>(eta));
    cohort = top_k(session.table(), std::move(cohort), rungs[r], keep);
  }
}

std::vector<ConfigId> draw_cohort(ConfigSampler& sampler, int n) {
  std::vector<ConfigId> cohort;
  while (static_cast<int>(cohort.size()) < n && !sampler.empty()) cohort.push_back(sampler.take());
  return cohort;
}

}  // namespace

std::vector<int> geometric_rungs(int min_budget, int max_budget, int eta) {
  require_eta(eta);
  if (min_budget < 1 || max_budget < min_budget) {
    throw std::invalid_argument("rungs need 1 <= min_budget <= max_budget");
  }
  std::vector<int> rungs;
  for (long long b = min_budget; b < max_budget; b *= eta) rungs.push_back(static_cast<int>(b));
  rungs.push_back(max_budget);
  return rungs;
}

std::vector<int> ShSchedule::rungs(int b_max) const {
  return geometric_rungs(min_budget, max_budget > 0 ? max_budget : b_max, eta);
}

Trajectory run_random_search(const BenchmarkTable& table, const RunSettings& settings) {
  EvaluationSession session(table, settings.resolved_budget(table), settings.measure_time);
  ConfigSampler sampler(table, settings.seed);
  while (!session.exhausted() && !sampler.empty()) session.advance(sampler.take(), table.b_max());
  return session.finish("rs", settings.seed, session.exhausted() ? "" : kNoConfigsLeft);
}

Trajectory run_successive_halving(const BenchmarkTable& table, const RunSettings& settings,
                                  const ShSchedule& schedule) {
  EvaluationSession session(table, settings.resolved_budget(table), settings.measure_time);
  const auto rungs = schedule.rungs(table.b_max());
  int n = schedule.n_initial;
  if (n <= 0) {
    n = 1;
    for (std::size_t i = 1; i < rungs.size(); ++i) n *= schedule.eta;
  }
  ConfigSampler sampler(table, settings.seed);
  for (int bracket = 0; !session.exhausted() && !sampler.empty(); ++bracket) {
    if (schedule.brackets > 0 && bracket == schedule.brackets) break;
    run_bracket(session, draw_cohort(sampler, n), rungs, schedule.eta);
  }
  const bool out_of_configs = !session.exhausted() && sampler.empty();
  return session.finish("sh", settings.seed, out_of_configs ? kNoConfigsLeft : "");
}

std::vector<HyperbandBracket> hyperband_brackets(int b_max, int eta) {
  require_eta(eta);
  if (b_max < 1) throw std::invalid_argument("b_max must be >= 1");
  int s_max = 0;
  for (long long p = eta; p <= b_max; p *= eta) ++s_max;

  std::vector<long long> powers{1};
  for (int s = 1; s <= s_max; ++s) powers.push_back(powers.back() * eta);

  std::vector<HyperbandBracket> out;
  for (int s = s_max; s >= 0; --s) {
    HyperbandBracket bracket;
    bracket.s = s;
    // ceil((s_max + 1) * eta^s / (s + 1)) in integers
    const long long num = static_cast<long long>(s_max + 1) * powers[static_cast<std::size_t>(s)];
    bracket.n = static_cast<int>((num + s) / (s + 1));
    for (int i = 0; i <= s; ++i) {
      const double exact = static_cast<double>(b_max) /
                           static_cast<double>(powers[static_cast<std::size_t>(s - i)]);
      int budget = std::max(1, static_cast<int>(exact));
      if (!bracket.rungs.empty()) budget = std::max(budget, bracket.rungs.back() + 1);
      bracket.rungs.push_back(std::min(budget, b_max));
    }
    bracket.rungs.back() = b_max;
    out.push_back(std::move(bracket));
  }
  return out;
}

Trajectory run_hyperband(const BenchmarkTable& table, const RunSettings& settings, int eta) {
  EvaluationSession session(table, settings.resolved_budget(table), settings.measure_time);
  const auto brackets = hyperband_brackets(table.b_max(), eta);
  ConfigSampler sampler(table, settings.seed);
  for (std::size_t i = 0; !session.exhausted() && !sampler.empty(); ++i) {
    const auto& bracket = brackets[i % brackets.size()];
    run_bracket(session, draw_cohort(sampler, bracket.n), bracket.rungs, eta);
  }
  const bool out_of_configs = !session.exhausted() && sampler.empty();
  return session.finish("hb", settings.seed, out_of_configs ? kNoConfigsLeft : "");
}

Trajectory run_asha(const BenchmarkTable& table, const RunSettings& settings, int eta) {
  EvaluationSession session(table, settings.resolved_budget(table), settings.measure_time);
  const auto rungs = geometric_rungs(1, table.b_max(), eta);
  ConfigSampler sampler(table, settings.seed);

  // completions[k]: configs that finished rung k; promoted[k]: those already moved on.
  std::vector<std::vector<ConfigId>> completions(rungs.size());
  std::vector<std::set<ConfigId>> promoted(rungs.size());

  auto promotable = [&](std::size_t k) -> std::optional<ConfigId> {
    const auto quota = completions[k].size() / static_cast<std::size_t>(eta);
    if (quota == 0) return std::nullopt;
    for (ConfigId id : top_k(table, completions[k], rungs[k], quota)) {
      if (!promoted[k].contains(id)) return id;
    }
    return std::nullopt;
  };

  while (!session.exhausted()) {
    std::optional<std::pair<std::size_t, ConfigId>> job;
    for (std::size_t k = rungs.size() - 1; k-- > 0;) {
      if (auto id = promotable(k)) {
        job.emplace(k, *id);
        break;
      }
    }
    if (job) {
      const auto [k, id] = *job;
      promoted[k].insert(id);
      session.advance(id, rungs[k + 1]);
      completions[k + 1].push_back(id);
    } else if (!sampler.empty()) {
      const ConfigId id = sampler.take();
      session.advance(id, rungs[0]);
      completions[0].push_back(id);
    } else {
      break;
    }
  }
  return session.finish("asha", settings.seed, session.exhausted() ? "" : kNoConfigsLeft);
}

}  // namespace dpl
