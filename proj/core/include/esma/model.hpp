#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "esma/types.hpp"

namespace esma {

using ParamVector = std::vector<double>;

struct DualResponse {
  bool correct = false;
  MetaAnswer meta = MetaAnswer::unparseable;
  std::optional<double> confidence;
};

/// A model whose behavior is a pure function of a flat parameter vector.
/// Implementations must be safe to call concurrently.
class ParametricModel {
 public:
  virtual ~ParametricModel() = default;

  virtual std::size_t dimension() const = 0;

  /// Answers the direct and the meta question for one item in independent contexts.
  virtual DualResponse respond(std::span<const double> theta, const QaItem& item) const = 0;

  /// Answers the single-prompt "I don't know" variant.
  virtual IdkOutcome respond_idk(std::span<const double> theta, const QaItem& item) const = 0;
};

/// Evaluates every item; records come back in dataset order regardless of
/// `threads`.
std::vector<EvalRecord> evaluate_model(const ParametricModel& model, std::span<const double> theta,
                                       const Dataset& data, bool with_idk, std::size_t threads = 1);

}  // namespace esma
