#pragma once

#include <concepts>
#include <cstdint>
#include <vector>

#include "cpe/action.hpp"
#include "cpe/rng.hpp"
#include "cpe/scm.hpp"

namespace cpe {

// What an algorithm may do with the world: play an arm of the catalog, or
// observe under the null intervention. Nothing else about the model leaks.
template <class E>
concept Environment = requires(E env, const E cenv, std::size_t arm) {
  { env.play(arm) } -> std::same_as<Observation>;
  { env.observe() } -> std::same_as<Observation>;
  { cenv.num_actions() } -> std::convertible_to<std::size_t>;
};

// Simulated environment backed by an SCM. The j-th play of a given arm (and
// the j-th passive observation) is drawn from a stream keyed by
// (trial_key, arm, j): identical play sequences give identical observations,
// and two algorithms run on the same trial key see common random numbers.
class ModelEnvironment {
 public:
  ModelEnvironment(const ScmModel& model, const std::vector<Action>& actions,
                   std::uint64_t trial_key)
      : model_(&model), actions_(&actions), key_(trial_key), counts_(actions.size() + 1, 0) {
    for (const auto& a : actions) model.check_action(a);
  }

  std::size_t num_actions() const noexcept { return actions_->size(); }
  const Action& action(std::size_t arm) const { return actions_->at(arm); }

  Observation play(std::size_t arm) {
    return draw(arm + 1, actions_->at(arm));
  }

  Observation observe() { return draw(0, null_); }

  std::uint64_t plays() const noexcept { return plays_; }

 private:
  Observation draw(std::size_t stream, const Action& action) {
    CounterRng rng(derive_key(derive_key(key_, stream), counts_[stream]++));
    ++plays_;
    return model_->sample(action, rng);
  }

  const ScmModel* model_;
  const std::vector<Action>* actions_;
  std::uint64_t key_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t plays_ = 0;
  Action null_;
};

static_assert(Environment<ModelEnvironment>);

}  // namespace cpe
