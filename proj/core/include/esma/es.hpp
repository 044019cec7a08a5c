#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "esma/model.hpp"
#include "esma/reward.hpp"
#include "esma/sdt.hpp"

namespace esma::es {

struct EsConfig {
  double sigma = 1e-3;
  double alpha = 5e-4;
  std::size_t generations = 750;
  std::size_t population = 32;
  std::size_t batch_size = 256;
  std::uint64_t master_seed = 0;
  RewardVariant reward = RewardVariant::joint;
  /// Mirrored sampling: eps_{i + N/2} = -eps_i. Requires even N.
  bool antithetic = false;
  /// Draw a fresh batch every generation; otherwise reuse generation 0's batch.
  bool resample_batch = true;
  /// Fitness-evaluation workers. Results do not depend on this value.
  std::size_t threads = 1;

  /// Defaults for the desk-scale surrogate; the LLM-scale sigma/alpha above
  /// barely move a ~200-dimensional parameter vector.
  static EsConfig surrogate_defaults();

  /// Throws Error(config) on sigma < 0, alpha < 0, N < 2, n == 0, or
  /// antithetic sampling with odd N.
  void validate() const;

  friend bool operator==(const EsConfig&, const EsConfig&) = default;
};

void to_json(nlohmann::json& j, const EsConfig& c);
/// Missing keys keep the values already in `c`.
void merge_from_json(const nlohmann::json& j, EsConfig& c);

struct FitnessStats {
  std::vector<double> raw;
  double mean = 0.0;
  /// Population standard deviation (divides by N).
  double stddev = 0.0;
  std::vector<double> standardized;
  /// stddev < 1e-12; standardized is all zeros.
  bool degenerate = false;
};

inline constexpr double kDegenerateStd = 1e-12;

/// Throws Error(domain) for fewer than two values.
FitnessStats z_standardize(std::span<const double> fitness);

/// Reconstructs one individual's Gaussian perturbation from its seed.
class NoiseHandle {
 public:
  NoiseHandle(std::size_t index, std::uint64_t seed, std::size_t dimension, bool negated);

  std::size_t index() const noexcept { return index_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t dimension() const noexcept { return dimension_; }
  bool negated() const noexcept { return negated_; }

  /// Writes eps_i into `out` (size must equal dimension()).
  void fill(std::span<double> out) const;
  std::vector<double> noise() const;
  /// theta + sigma * eps_i, written into `out`.
  void perturb(std::span<const double> theta, double sigma, std::span<double> out) const;

 private:
  std::size_t index_;
  std::uint64_t seed_;
  std::size_t dimension_;
  bool negated_;
};

/// Seed of individual i's noise at a generation. Depends only on
/// (master_seed, generation, i), never on evaluation order.
std::uint64_t noise_seed(std::uint64_t master_seed, std::size_t generation, std::size_t individual);

std::vector<NoiseHandle> sample_population(std::span<const double> theta, const EsConfig& cfg,
                                           std::size_t generation);

/// theta + alpha / N * sum_i Fhat_i eps_i, summed in index order. A
/// degenerate generation leaves theta unchanged.
std::vector<double> es_step(std::span<const double> theta, std::span<const NoiseHandle> noise,
                            const FitnessStats& stats, const EsConfig& cfg);

/// Same update with explicit perturbation vectors.
std::vector<double> es_step(std::span<const double> theta, std::span<const std::vector<double>> noise,
                            const FitnessStats& stats, const EsConfig& cfg);

/// Indices of the training items used at `generation` (common to every
/// individual of that generation).
std::vector<std::size_t> batch_indices(const EsConfig& cfg, std::size_t train_size, std::size_t generation);

struct TrajectoryRow {
  std::size_t generation = 0;
  double mean_fitness = 0.0;
  double std_fitness = 0.0;
  /// Eval-set metrics of theta_t, present at the evaluation cadence.
  std::optional<sdt::MetricsSummary> metrics;

  friend bool operator==(const TrajectoryRow&, const TrajectoryRow&) = default;
};

void to_json(nlohmann::json& j, const TrajectoryRow& r);
void from_json(const nlohmann::json& j, TrajectoryRow& r);

struct TrainState {
  std::size_t generation = 0;
  ParamVector theta;
  std::vector<TrajectoryRow> trajectory;
};

/// Fitness of a parameter vector on a batch of training indices. Must be
/// safe to call concurrently.
using FitnessFn = std::function<double(std::span<const double> theta, std::span<const std::size_t> batch)>;
using EvalFn = std::function<sdt::MetricsSummary(std::span<const double> theta)>;

struct TrainOptions {
  /// Evaluate theta_t every `eval_every` generations (0 disables).
  std::size_t eval_every = 25;
  /// Invoke on_checkpoint every `checkpoint_every` completed generations (0 disables).
  std::size_t checkpoint_every = 0;
  std::function<void(const TrainState&)> on_checkpoint;
  /// Stop once this generation index has been reached, leaving the run
  /// resumable.
  std::optional<std::size_t> stop_at;
};

struct TrainResult {
  TrainState state;
  bool completed = false;
};

/// Runs generations state.generation .. cfg.generations-1.
TrainResult train(TrainState state, std::size_t train_size, const FitnessFn& fitness, const EvalFn& evaluate,
                  const EsConfig& cfg, const TrainOptions& options = {});

/// ES for metacognitive alignment: fitness is the configured reward of
/// `model` over each generation's shared batch from `train_set`; the
/// trajectory carries eval-set metrics.
TrainResult train_esma(const ParametricModel& model, const Dataset& train_set, const Dataset& eval_set,
                       TrainState start, const EsConfig& cfg, const TrainOptions& options = {});

}  // namespace esma::es
