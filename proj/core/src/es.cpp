#include "esma/es.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "esma/error.hpp"
#include "esma/parallel.hpp"
#include "esma/rng.hpp"

namespace esma::es {

EsConfig EsConfig::surrogate_defaults() {
  EsConfig c;
  c.sigma = 0.02;
  c.alpha = 0.01;
  c.generations = 500;
  c.population = 32;
  c.batch_size = 128;
  return c;
}

void EsConfig::validate() const {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw Error(ErrorKind::config, "es.sigma must be finite and >= 0");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw Error(ErrorKind::config, "es.alpha must be finite and >= 0");
  if (population < 2) throw Error(ErrorKind::config, "es.population must be >= 2");
  if (batch_size == 0) throw Error(ErrorKind::config, "es.batch_size must be >= 1");
  if (antithetic && population % 2 != 0) {
    throw Error(ErrorKind::config, "antithetic sampling needs an even population");
  }
}

void to_json(nlohmann::json& j, const EsConfig& c) {
  j = nlohmann::json{{"sigma", c.sigma},
                     {"alpha", c.alpha},
                     {"generations", c.generations},
                     {"population", c.population},
                     {"batch_size", c.batch_size},
                     {"master_seed", c.master_seed},
                     {"reward", to_string(c.reward)},
                     {"antithetic", c.antithetic},
                     {"resample_batch", c.resample_batch},
                     {"threads", c.threads}};
}

void merge_from_json(const nlohmann::json& j, EsConfig& c) {
  if (j.contains("sigma")) c.sigma = j["sigma"].get<double>();
  if (j.contains("alpha")) c.alpha = j["alpha"].get<double>();
  if (j.contains("generations")) c.generations = j["generations"].get<std::size_t>();
  if (j.contains("population")) c.population = j["population"].get<std::size_t>();
  if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<std::size_t>();
  if (j.contains("master_seed")) c.master_seed = j["master_seed"].get<std::uint64_t>();
  if (j.contains("reward")) c.reward = parse_reward_variant(j["reward"].get<std::string>());
  if (j.contains("antithetic")) c.antithetic = j["antithetic"].get<bool>();
  if (j.contains("resample_batch")) c.resample_batch = j["resample_batch"].get<bool>();
  if (j.contains("threads")) c.threads = j["threads"].get<std::size_t>();
}

FitnessStats z_standardize(std::span<const double> fitness) {
  if (fitness.size() < 2) throw Error(ErrorKind::domain, "z_standardize needs at least two fitness values");
  FitnessStats s;
  s.raw.assign(fitness.begin(), fitness.end());
  const double n = static_cast<double>(fitness.size());
  s.mean = std::accumulate(fitness.begin(), fitness.end(), 0.0) / n;
  double ss = 0.0;
  for (double f : fitness) ss += (f - s.mean) * (f - s.mean);
  s.stddev = std::sqrt(ss / n);
  s.standardized.assign(fitness.size(), 0.0);
  s.degenerate = s.stddev < kDegenerateStd;
  if (!s.degenerate) {
    for (std::size_t i = 0; i < fitness.size(); ++i) s.standardized[i] = (fitness[i] - s.mean) / s.stddev;
  }
  return s;
}

NoiseHandle::NoiseHandle(std::size_t index, std::uint64_t seed, std::size_t dimension, bool negated)
    : index_(index), seed_(seed), dimension_(dimension), negated_(negated) {}

void NoiseHandle::fill(std::span<double> out) const {
  if (out.size() != dimension_) throw Error(ErrorKind::data, "noise buffer has the wrong dimension");
  fill_standard_normal(seed_, out);
  if (negated_) {
    for (double& v : out) v = -v;
  }
}

std::vector<double> NoiseHandle::noise() const {
  std::vector<double> eps(dimension_);
  fill(eps);
  return eps;
}

void NoiseHandle::perturb(std::span<const double> theta, double sigma, std::span<double> out) const {
  if (theta.size() != dimension_) throw Error(ErrorKind::data, "parameter vector has the wrong dimension");
  fill(out);
  for (std::size_t k = 0; k < dimension_; ++k) out[k] = theta[k] + sigma * out[k];
}

std::uint64_t noise_seed(std::uint64_t master_seed, std::size_t generation, std::size_t individual) {
  return derive_seed(master_seed, "es.noise", generation, individual);
}

std::vector<NoiseHandle> sample_population(std::span<const double> theta, const EsConfig& cfg,
                                           std::size_t generation) {
  cfg.validate();
  if (theta.empty()) throw Error(ErrorKind::data, "sample_population: empty parameter vector");
  std::vector<NoiseHandle> handles;
  handles.reserve(cfg.population);
  const std::size_t half = cfg.population / 2;
  for (std::size_t i = 0; i < cfg.population; ++i) {
    if (cfg.antithetic && i >= half) {
      handles.emplace_back(i, noise_seed(cfg.master_seed, generation, i - half), theta.size(), true);
    } else {
      handles.emplace_back(i, noise_seed(cfg.master_seed, generation, i), theta.size(), false);
    }
  }
  return handles;
}

namespace {

template <class Fill>
std::vector<double> apply_update(std::span<const double> theta, std::size_t n, Fill&& fill,
                                 const FitnessStats& stats, const EsConfig& cfg) {
  if (stats.standardized.size() != n) {
    throw Error(ErrorKind::data,
                fmt::format("es_step: {} fitness values for {} individuals", stats.standardized.size(), n));
  }
  std::vector<double> next(theta.begin(), theta.end());
  if (stats.degenerate || n == 0) return next;

  std::vector<double> acc(theta.size(), 0.0);
  std::vector<double> eps(theta.size());
  for (std::size_t i = 0; i < n; ++i) {
    fill(i, eps);
    const double w = stats.standardized[i];
    for (std::size_t k = 0; k < eps.size(); ++k) acc[k] += w * eps[k];
  }
  const double scale = cfg.alpha / static_cast<double>(n);
  for (std::size_t k = 0; k < next.size(); ++k) next[k] += scale * acc[k];
  return next;
}

}  // namespace

std::vector<double> es_step(std::span<const double> theta, std::span<const NoiseHandle> noise,
                            const FitnessStats& stats, const EsConfig& cfg) {
  return apply_update(
      theta, noise.size(), [&](std::size_t i, std::vector<double>& eps) { noise[i].fill(eps); }, stats, cfg);
}

std::vector<double> es_step(std::span<const double> theta, std::span<const std::vector<double>> noise,
                            const FitnessStats& stats, const EsConfig& cfg) {
  return apply_update(
      theta, noise.size(),
      [&](std::size_t i, std::vector<double>& eps) {
        if (noise[i].size() != eps.size()) throw Error(ErrorKind::data, "es_step: noise dimension mismatch");
        std::copy(noise[i].begin(), noise[i].end(), eps.begin());
      },
      stats, cfg);
}

std::vector<std::size_t> batch_indices(const EsConfig& cfg, std::size_t train_size, std::size_t generation) {
  if (train_size == 0) throw Error(ErrorKind::data, "empty training set");
  std::vector<std::size_t> idx(train_size);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const std::size_t n = std::min(cfg.batch_size, train_size);
  if (n == train_size) return idx;

  const std::size_t g = cfg.resample_batch ? generation : 0;
  Engine engine(derive_seed(cfg.master_seed, "es.batch", g));
  // Partial Fisher-Yates: the first n slots become a uniform sample.
  for (std::size_t i = 0; i < n; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, train_size - 1);
    std::swap(idx[i], idx[pick(engine)]);
  }
  idx.resize(n);
  std::sort(idx.begin(), idx.end());
  return idx;
}

namespace {

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

std::optional<double> optional_double(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

}  // namespace

void to_json(nlohmann::json& j, const TrajectoryRow& r) {
  j = nlohmann::json{{"generation", r.generation}, {"mean_fitness", r.mean_fitness}, {"std_fitness", r.std_fitness}};
  if (r.metrics) {
    const auto& m = *r.metrics;
    j["metrics"] = {{"d_type2", optional_json(m.d_type2)},
                    {"raw_alignment", m.raw_alignment},
                    {"accuracy", m.accuracy},
                    {"yes_ratio", m.yes_ratio},
                    {"yfr", optional_json(m.yfr)},
                    {"nfr", optional_json(m.nfr)},
                    {"auc", optional_json(m.auc)},
                    {"n_records", m.n_records},
                    {"n_unparseable", m.n_unparseable}};
  }
}

void from_json(const nlohmann::json& j, TrajectoryRow& r) {
  r.generation = j.at("generation").get<std::size_t>();
  r.mean_fitness = j.at("mean_fitness").get<double>();
  r.std_fitness = j.at("std_fitness").get<double>();
  r.metrics.reset();
  if (j.contains("metrics")) {
    const auto& mj = j["metrics"];
    sdt::MetricsSummary m;
    m.d_type2 = optional_double(mj, "d_type2");
    m.raw_alignment = mj.at("raw_alignment").get<double>();
    m.accuracy = mj.at("accuracy").get<double>();
    m.yes_ratio = mj.at("yes_ratio").get<double>();
    m.yfr = optional_double(mj, "yfr");
    m.nfr = optional_double(mj, "nfr");
    m.auc = optional_double(mj, "auc");
    m.n_records = mj.at("n_records").get<std::size_t>();
    m.n_unparseable = mj.at("n_unparseable").get<std::size_t>();
    r.metrics = m;
  }
}

TrainResult train(TrainState state, std::size_t train_size, const FitnessFn& fitness, const EvalFn& evaluate,
                  const EsConfig& cfg, const TrainOptions& options) {
  cfg.validate();
  if (state.theta.empty()) throw Error(ErrorKind::data, "train: empty parameter vector");
  if (train_size == 0) throw Error(ErrorKind::data, "train: empty training set");

  const std::size_t dim = state.theta.size();
  std::vector<double> raw(cfg.population);
  std::vector<std::vector<double>> scratch(cfg.population, std::vector<double>(dim));

  while (state.generation < cfg.generations) {
    if (options.stop_at && state.generation >= *options.stop_at) return {std::move(state), false};

    const std::size_t t = state.generation;
    const auto batch = batch_indices(cfg, train_size, t);
    const auto handles = sample_population(state.theta, cfg, t);

    parallel_for(cfg.population, cfg.threads, [&](std::size_t i) {
      handles[i].perturb(state.theta, cfg.sigma, scratch[i]);
      raw[i] = fitness(scratch[i], batch);
    });

    const FitnessStats stats = z_standardize(raw);
    TrajectoryRow row{t, stats.mean, stats.stddev, std::nullopt};
    if (evaluate && options.eval_every > 0 && t % options.eval_every == 0) row.metrics = evaluate(state.theta);
    state.trajectory.push_back(row);

    state.theta = es_step(state.theta, handles, stats, cfg);
    state.generation = t + 1;

    if (options.on_checkpoint && options.checkpoint_every > 0 && state.generation % options.checkpoint_every == 0) {
      options.on_checkpoint(state);
    }
  }
  return {std::move(state), true};
}

TrainResult train_esma(const ParametricModel& model, const Dataset& train_set, const Dataset& eval_set,
                       TrainState start, const EsConfig& cfg, const TrainOptions& options) {
  if (train_set.empty()) throw Error(ErrorKind::data, "train_esma: empty training set");
  if (start.theta.size() != model.dimension()) {
    throw Error(ErrorKind::data, fmt::format("train_esma: parameter dimension {} does not match model dimension {}",
                                             start.theta.size(), model.dimension()));
  }
  FitnessFn fitness_fn = [&](std::span<const double> theta, std::span<const std::size_t> batch) {
    std::vector<const QaItem*> items;
    items.reserve(batch.size());
    for (std::size_t i : batch) items.push_back(&train_set.items[i]);
    return fitness(model, theta, items, cfg.reward);
  };
  EvalFn eval_fn;
  if (!eval_set.empty()) {
    eval_fn = [&](std::span<const double> theta) {
      return sdt::behavioral_metrics(evaluate_model(model, theta, eval_set, false, cfg.threads));
    };
  }
  return train(std::move(start), train_set.size(), fitness_fn, eval_fn, cfg, options);
}

}  // namespace esma::es
