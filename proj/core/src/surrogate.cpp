#include "esma/surrogate.hpp"

#include <charconv>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "esma/dataset.hpp"
#include "esma/digest.hpp"
#include "esma/error.hpp"
#include "esma/rng.hpp"
#include "esma/sdt.hpp"

namespace esma::surrogate {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

void normalize(std::span<double> v) {
  const double n = std::sqrt(dot(v, v));
  for (double& x : v) x /= n;
}

std::string digest_of(std::span<const double> v) {
  return sha256_hex(std::string_view(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(double)));
}

constexpr std::string_view kFactPrefix = "fact:";

}  // namespace

void SurrogateConfig::validate() const {
  if (dim < 2) throw Error(ErrorKind::config, "surrogate dim must be >= 2");
  if (facts < 10) throw Error(ErrorKind::config, "surrogate facts must be >= 10");
  if (!std::isfinite(tau)) throw Error(ErrorKind::config, "surrogate tau must be finite");
  if (!(format_noise >= 0.0) || !std::isfinite(format_noise)) {
    throw Error(ErrorKind::config, "surrogate format_noise must be finite and >= 0");
  }
  if (!(init_scale >= 0.0) || !std::isfinite(init_scale)) {
    throw Error(ErrorKind::config, "surrogate init_scale must be finite and >= 0");
  }
}

void to_json(nlohmann::json& j, const SurrogateConfig& c) {
  j = nlohmann::json{{"dim", c.dim},
                     {"facts", c.facts},
                     {"tau", c.tau},
                     {"format_noise", c.format_noise},
                     {"init_scale", c.init_scale}};
}

void from_json(const nlohmann::json& j, SurrogateConfig& c) {
  c = SurrogateConfig{};
  if (j.contains("dim")) c.dim = j["dim"].get<std::size_t>();
  if (j.contains("facts")) c.facts = j["facts"].get<std::size_t>();
  if (j.contains("tau")) c.tau = j["tau"].get<double>();
  if (j.contains("format_noise")) c.format_noise = j["format_noise"].get<double>();
  if (j.contains("init_scale")) c.init_scale = j["init_scale"].get<double>();
}

SurrogateWorld SurrogateWorld::make(const SurrogateConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  SurrogateWorld w;
  w.cfg_ = cfg;
  w.seed_ = seed;

  w.features_.resize(cfg.facts * cfg.dim);
  fill_standard_normal(derive_seed(seed, kFeatureStream), w.features_);
  for (std::size_t i = 0; i < cfg.facts; ++i) {
    normalize(std::span<double>(w.features_).subspan(i * cfg.dim, cfg.dim));
  }

  w.answer_dir_.resize(cfg.dim);
  fill_standard_normal(derive_seed(seed, kAnswerDirStream), w.answer_dir_);
  normalize(w.answer_dir_);

  w.eta_.resize(cfg.facts);
  fill_standard_normal(derive_seed(seed, kFormatNoiseStream), w.eta_);
  for (double& e : w.eta_) e *= cfg.format_noise;

  w.answerable_.resize(cfg.facts);
  for (std::size_t i = 0; i < cfg.facts; ++i) w.answerable_[i] = dot(w.feature(i), w.answer_dir_) > 0.0;
  return w;
}

SurrogateWorld SurrogateWorld::from_arrays(const SurrogateConfig& cfg, std::vector<double> features,
                                           std::vector<double> answer_direction, std::vector<double> format_noise) {
  if (cfg.dim == 0 || cfg.facts == 0 || features.size() != cfg.facts * cfg.dim ||
      answer_direction.size() != cfg.dim || format_noise.size() != cfg.facts) {
    throw Error(ErrorKind::config, "from_arrays: array sizes do not match dim/facts");
  }
  SurrogateWorld w;
  w.cfg_ = cfg;
  w.features_ = std::move(features);
  w.answer_dir_ = std::move(answer_direction);
  w.eta_ = std::move(format_noise);
  w.answerable_.resize(cfg.facts);
  for (std::size_t i = 0; i < cfg.facts; ++i) w.answerable_[i] = dot(w.feature(i), w.answer_dir_) > 0.0;
  return w;
}

std::span<const double> SurrogateWorld::feature(std::size_t i) const {
  if (i >= cfg_.facts) throw Error(ErrorKind::domain, "fact index out of range");
  return std::span<const double>(features_).subspan(i * cfg_.dim, cfg_.dim);
}

double SurrogateWorld::format_noise(std::size_t i) const {
  if (i >= cfg_.facts) throw Error(ErrorKind::domain, "fact index out of range");
  return eta_[i];
}

bool SurrogateWorld::answerable(std::size_t i) const {
  if (i >= cfg_.facts) throw Error(ErrorKind::domain, "fact index out of range");
  return answerable_[i] != 0;
}

nlohmann::json SurrogateWorld::manifest() const {
  const auto n_answerable = std::accumulate(answerable_.begin(), answerable_.end(), std::size_t{0});
  return nlohmann::json{{"config", cfg_},
                        {"seed", seed_},
                        {"answerable", n_answerable},
                        {"digests",
                         {{"features", digest_of(features_)},
                          {"answer_direction", digest_of(answer_dir_)},
                          {"format_noise", digest_of(eta_)}}}};
}

Heads split_heads(std::span<const double> theta, std::size_t dim) {
  if (theta.size() != 3 * dim) {
    throw Error(ErrorKind::data, fmt::format("parameter vector has dimension {}, expected {}", theta.size(), 3 * dim));
  }
  return {theta.subspan(0, dim), theta.subspan(dim, dim), theta.subspan(2 * dim, dim)};
}

bool direct_answer(std::span<const double> theta, const SurrogateWorld& world, std::size_t fact) {
  const Heads h = split_heads(theta, world.dim());
  return world.answerable(fact) && dot(h.knowledge, world.feature(fact)) > world.config().tau;
}

MetaResponse meta_answer(std::span<const double> theta, const SurrogateWorld& world, std::size_t fact) {
  const Heads h = split_heads(theta, world.dim());
  const auto x = world.feature(fact);
  MetaResponse r;
  r.z_yes = dot(h.yes, x);
  r.z_no = dot(h.no, x);
  r.yes = r.z_yes > r.z_no;
  return r;
}

IdkOutcome unified_idk_answer(std::span<const double> theta, const SurrogateWorld& world, std::size_t fact) {
  const MetaResponse m = meta_answer(theta, world, fact);
  const double score = (m.z_yes - m.z_no) + world.format_noise(fact);
  if (score <= 0.0) return {true, false};
  return {false, direct_answer(theta, world, fact)};
}

ParamVector init_params(const SurrogateConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ParamVector theta(3 * cfg.dim);
  fill_standard_normal(seed, theta);
  for (double& v : theta) v *= cfg.init_scale;
  return theta;
}

std::string fact_id(std::size_t fact) { return fmt::format("fact:{:04d}", fact); }

std::size_t fact_index(std::string_view id) {
  if (!id.starts_with(kFactPrefix)) throw Error(ErrorKind::data, "not a surrogate fact id: " + std::string(id));
  const auto digits = id.substr(kFactPrefix.size());
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || digits.empty()) {
    throw Error(ErrorKind::data, "not a surrogate fact id: " + std::string(id));
  }
  return value;
}

Dataset make_dataset(const SurrogateWorld& world) {
  std::vector<QaItem> items;
  items.reserve(world.facts());
  for (std::size_t i = 0; i < world.facts(); ++i) {
    items.push_back(QaItem{fact_id(i), fmt::format("Recall fact {}.", i), {fmt::format("fact {}", i)}, {}});
  }
  return esma::make_dataset(std::move(items), fmt::format("surrogate:seed={}", world.seed()));
}

SurrogateModel::SurrogateModel(std::shared_ptr<const SurrogateWorld> world) : world_(std::move(world)) {
  if (!world_) throw Error(ErrorKind::config, "SurrogateModel needs a world");
}

std::size_t SurrogateModel::checked_index(const QaItem& item) const {
  const std::size_t i = fact_index(item.id);
  if (i >= world_->facts()) throw Error(ErrorKind::data, "fact id out of range: " + item.id);
  return i;
}

DualResponse SurrogateModel::respond(std::span<const double> theta, const QaItem& item) const {
  const std::size_t i = checked_index(item);
  const MetaResponse m = meta_answer(theta, *world_, i);
  return {direct_answer(theta, *world_, i), m.yes ? MetaAnswer::yes : MetaAnswer::no,
          sdt::confidence(m.z_yes, m.z_no)};
}

IdkOutcome SurrogateModel::respond_idk(std::span<const double> theta, const QaItem& item) const {
  return unified_idk_answer(theta, *world_, checked_index(item));
}

}  // namespace esma::surrogate
