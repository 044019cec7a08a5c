#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "esma/model.hpp"
#include "esma/types.hpp"

namespace esma::surrogate {

struct SurrogateConfig {
  std::size_t dim = 64;
  std::size_t facts = 2000;
  /// Knowledge threshold on theta_K . x_i.
  double tau = 0.02;
  /// Std of the per-fact format noise in the IDK pathway.
  double format_noise = 0.5;
  /// Std of the i.i.d. Gaussian initial parameters.
  double init_scale = 0.05;

  /// Throws Error(config) unless dim >= 2, facts >= 10 and scales are finite and >= 0.
  void validate() const;

  friend bool operator==(const SurrogateConfig&, const SurrogateConfig&) = default;
};

void to_json(nlohmann::json& j, const SurrogateConfig& c);
void from_json(const nlohmann::json& j, SurrogateConfig& c);

/// Immutable fact geometry: unit-norm features x_i, a hidden unit
/// answerability direction w_a, and fixed per-fact format noise eta_i.
class SurrogateWorld {
 public:
  static SurrogateWorld make(const SurrogateConfig& cfg, std::uint64_t seed);

  /// Hand-built world (features are used as given, not normalized).
  /// cfg.dim and cfg.facts must match the array sizes.
  static SurrogateWorld from_arrays(const SurrogateConfig& cfg, std::vector<double> features,
                                    std::vector<double> answer_direction, std::vector<double> format_noise);

  const SurrogateConfig& config() const noexcept { return cfg_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t dim() const noexcept { return cfg_.dim; }
  std::size_t facts() const noexcept { return cfg_.facts; }

  std::span<const double> feature(std::size_t i) const;
  std::span<const double> answer_direction() const noexcept { return answer_dir_; }
  double format_noise(std::size_t i) const;
  /// x_i . w_a > 0.
  bool answerable(std::size_t i) const;

  /// Config, seed and digests of the generated arrays. Features are never
  /// serialized; they are regenerated from the seed.
  nlohmann::json manifest() const;

 private:
  SurrogateWorld() = default;

  SurrogateConfig cfg_;
  std::uint64_t seed_ = 0;
  std::vector<double> features_;  // facts x dim, row-major
  std::vector<double> answer_dir_;
  std::vector<double> eta_;
  std::vector<unsigned char> answerable_;
};

/// Seed substreams used by make(); exposed so tests can regenerate the world.
inline constexpr std::string_view kFeatureStream = "world.features";
inline constexpr std::string_view kAnswerDirStream = "world.answer_dir";
inline constexpr std::string_view kFormatNoiseStream = "world.format_noise";

/// theta = [theta_K | theta_Y | theta_N], each of length dim.
struct Heads {
  std::span<const double> knowledge;
  std::span<const double> yes;
  std::span<const double> no;
};

/// Splits theta into its three heads. Throws Error(data) unless
/// theta.size() == 3 * dim.
Heads split_heads(std::span<const double> theta, std::size_t dim);

/// C = 1 iff the fact is answerable and theta_K . x_i > tau.
bool direct_answer(std::span<const double> theta, const SurrogateWorld& world, std::size_t fact);

struct MetaResponse {
  bool yes = false;
  double z_yes = 0.0;
  double z_no = 0.0;
};

/// z_yes = theta_Y . x_i, z_no = theta_N . x_i; Yes iff z_yes > z_no (ties answer No).
MetaResponse meta_answer(std::span<const double> theta, const SurrogateWorld& world, std::size_t fact);

/// Abstains iff (z_yes - z_no) + eta_i <= 0; otherwise answers with the
/// direct-answer correctness.
IdkOutcome unified_idk_answer(std::span<const double> theta, const SurrogateWorld& world, std::size_t fact);

/// theta_0 with i.i.d. N(0, init_scale^2) entries.
ParamVector init_params(const SurrogateConfig& cfg, std::uint64_t seed);

/// "fact:0017"
std::string fact_id(std::size_t fact);
/// Inverse of fact_id. Throws Error(data) on foreign ids.
std::size_t fact_index(std::string_view id);

/// One QaItem per fact, in fact order.
Dataset make_dataset(const SurrogateWorld& world);

class SurrogateModel final : public ParametricModel {
 public:
  explicit SurrogateModel(std::shared_ptr<const SurrogateWorld> world);

  std::size_t dimension() const override { return 3 * world_->dim(); }
  DualResponse respond(std::span<const double> theta, const QaItem& item) const override;
  IdkOutcome respond_idk(std::span<const double> theta, const QaItem& item) const override;

  const SurrogateWorld& world() const noexcept { return *world_; }

 private:
  std::size_t checked_index(const QaItem& item) const;

  std::shared_ptr<const SurrogateWorld> world_;
};

}  // namespace esma::surrogate
