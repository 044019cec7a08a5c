#include "fixtures.hpp"

#include <atomic>
#include <fstream>
#include <random>
#include <sstream>

#include <unistd.h>

namespace fixture {

std::filesystem::path temp_dir(std::string_view tag) {
  static std::atomic<int> counter{0};
  auto dir = std::filesystem::temp_directory_path() /
             ("esma-test-" + std::to_string(::getpid()) + "-" + std::string(tag) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

esma::EvalRecord rec(std::string id, bool correct, esma::MetaAnswer meta, std::optional<double> d) {
  esma::EvalRecord r;
  r.item_id = std::move(id);
  r.correct = correct;
  r.meta = meta;
  r.confidence = d;
  return r;
}

esma::EvalRecord rec(std::string id, bool correct, bool meta_yes, std::optional<double> d) {
  return rec(std::move(id), correct, meta_yes ? esma::MetaAnswer::yes : esma::MetaAnswer::no, d);
}

std::vector<esma::EvalRecord> random_records(std::uint64_t seed, std::size_t n, bool with_confidence, bool ties) {
  std::mt19937_64 g(seed);
  std::bernoulli_distribution coin(0.5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> grid(0, 10);
  std::vector<esma::EvalRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::optional<double> d;
    if (with_confidence) d = ties ? grid(g) / 10.0 : u(g);
    out.push_back(rec("r" + std::to_string(i), coin(g), coin(g), d));
  }
  return out;
}

esma::runner::RunConfig small_run(const std::filesystem::path& out, std::uint64_t seed) {
  esma::runner::RunConfig cfg;
  cfg.run_name = "small";
  cfg.seed = seed;
  cfg.surrogate.dim = 16;
  cfg.surrogate.facts = 400;
  cfg.es.generations = 40;
  cfg.es.population = 16;
  cfg.es.batch_size = 64;
  cfg.eval_every = 10;
  cfg.checkpoint_every = 10;
  cfg.output_dir = out;
  return cfg;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace fixture
