#pragma once

#include <span>
#include <string_view>

#include "esma/model.hpp"
#include "esma/types.hpp"

namespace esma {

enum class RewardVariant { joint, direct_only, meta_only };

/// "joint" | "direct" | "meta".
RewardVariant parse_reward_variant(std::string_view name);
std::string_view to_string(RewardVariant v);

/// R(C, A): 2 for correct & aligned, 1 for exactly one of the two, 0 otherwise.
constexpr int joint_reward(bool correct, bool aligned) noexcept {
  return static_cast<int>(correct) + static_cast<int>(aligned);
}

constexpr int variant_reward(RewardVariant v, bool correct, bool aligned) noexcept {
  switch (v) {
    case RewardVariant::joint: return joint_reward(correct, aligned);
    case RewardVariant::direct_only: return static_cast<int>(correct);
    case RewardVariant::meta_only: return static_cast<int>(aligned);
  }
  return 0;
}

/// Reward of one dual response. An unparseable meta answer scores A = 0.
int response_reward(RewardVariant v, const DualResponse& r) noexcept;

/// Mean reward over a batch of outcomes. Throws Error(data) on an empty batch.
double fitness(std::span<const DualOutcome> outcomes, RewardVariant v);

/// Mean reward of `model` at `theta` over `batch`. Summation runs in batch
/// order with integer accumulation, so the value is independent of batch
/// ordering and bitwise reproducible.
double fitness(const ParametricModel& model, std::span<const double> theta,
               std::span<const QaItem* const> batch, RewardVariant v);

}  // namespace esma
