#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace esma {

/// One question and its acceptable answer aliases.
struct QaItem {
  std::string id;
  std::string question;
  std::vector<std::string> answers;
  /// Keys other than id/question/answers, carried through unchanged.
  nlohmann::json extra = nlohmann::json::object();

  friend bool operator==(const QaItem&, const QaItem&) = default;
};

enum class MetaAnswer { yes, no, unparseable };

std::string_view to_string(MetaAnswer m);
MetaAnswer meta_answer_from_string(std::string_view s);

/// A meta answer is aligned with correctness when it says Yes for a correct
/// direct answer or No for an incorrect one.
constexpr bool align(bool correct, bool meta_yes) noexcept { return correct == meta_yes; }

struct DualOutcome {
  bool correct = false;
  bool meta_yes = false;
  bool aligned = false;

  static constexpr DualOutcome make(bool correct, bool meta_yes) noexcept {
    return {correct, meta_yes, align(correct, meta_yes)};
  }

  friend bool operator==(const DualOutcome&, const DualOutcome&) = default;
};

/// Outcome of the single-prompt "I don't know" format.
struct IdkOutcome {
  bool abstained = false;
  /// Answered and graded correct; an abstention is never correct.
  bool correct = false;

  /// IDK responses map onto a meta answer: abstaining reads as No.
  bool meta_yes() const noexcept { return !abstained; }

  friend bool operator==(const IdkOutcome&, const IdkOutcome&) = default;
};

/// Per-item result of the dual-prompt protocol (and optionally the IDK probe).
struct EvalRecord {
  std::string item_id;
  bool correct = false;
  MetaAnswer meta = MetaAnswer::unparseable;
  /// Two-logit confidence D in [0, 1], when the model exposes logits.
  std::optional<double> confidence;
  std::optional<IdkOutcome> idk;

  bool parsed() const noexcept { return meta != MetaAnswer::unparseable; }
  bool meta_yes() const noexcept { return meta == MetaAnswer::yes; }
  /// Only meaningful for parsed records.
  DualOutcome outcome() const noexcept { return DualOutcome::make(correct, meta_yes()); }

  friend bool operator==(const EvalRecord&, const EvalRecord&) = default;
};

void to_json(nlohmann::json& j, const EvalRecord& r);
void from_json(const nlohmann::json& j, EvalRecord& r);

struct Dataset {
  std::vector<QaItem> items;
  std::string source_path;
  /// SHA-256 of the bytes the dataset was parsed from.
  std::string content_hash;

  std::size_t size() const noexcept { return items.size(); }
  bool empty() const noexcept { return items.empty(); }
};

}  // namespace esma
