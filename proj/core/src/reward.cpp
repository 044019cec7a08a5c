#include "esma/reward.hpp"

#include <string>

#include "esma/error.hpp"

namespace esma {

RewardVariant parse_reward_variant(std::string_view name) {
  if (name == "joint") return RewardVariant::joint;
  if (name == "direct") return RewardVariant::direct_only;
  if (name == "meta") return RewardVariant::meta_only;
  throw Error(ErrorKind::config, "unknown reward variant '" + std::string(name) + "' (expected joint|direct|meta)");
}

std::string_view to_string(RewardVariant v) {
  switch (v) {
    case RewardVariant::joint: return "joint";
    case RewardVariant::direct_only: return "direct";
    case RewardVariant::meta_only: return "meta";
  }
  return "joint";
}

int response_reward(RewardVariant v, const DualResponse& r) noexcept {
  const bool aligned = r.meta != MetaAnswer::unparseable && align(r.correct, r.meta == MetaAnswer::yes);
  return variant_reward(v, r.correct, aligned);
}

double fitness(std::span<const DualOutcome> outcomes, RewardVariant v) {
  if (outcomes.empty()) throw Error(ErrorKind::data, "fitness: empty batch");
  long long total = 0;
  for (const auto& o : outcomes) total += variant_reward(v, o.correct, o.aligned);
  return static_cast<double>(total) / static_cast<double>(outcomes.size());
}

double fitness(const ParametricModel& model, std::span<const double> theta,
               std::span<const QaItem* const> batch, RewardVariant v) {
  if (batch.empty()) throw Error(ErrorKind::data, "fitness: empty batch");
  long long total = 0;
  for (const QaItem* item : batch) total += response_reward(v, model.respond(theta, *item));
  return static_cast<double>(total) / static_cast<double>(batch.size());
}

}  // namespace esma
