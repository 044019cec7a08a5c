#include "esma/runner.hpp"

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <utility>

#include <fmt/format.h>

#include "esma/checkpoint.hpp"
#include "esma/dataset.hpp"
#include "esma/digest.hpp"
#include "esma/error.hpp"
#include "esma/io.hpp"
#include "esma/rng.hpp"

namespace esma::runner {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(ModelKind k) { return k == ModelKind::surrogate ? "surrogate" : "remote"; }

void RunConfig::validate() const {
  if (run_name.empty()) throw Error(ErrorKind::config, "run_name must not be empty");
  if (model == ModelKind::surrogate) {
    surrogate.validate();
    if (!dataset_path.empty()) {
      throw Error(ErrorKind::config, "dataset.path is only used by remote models; the surrogate generates its facts");
    }
  } else {
    endpoint.validate();
    if (dataset_path.empty()) throw Error(ErrorKind::config, "dataset.path is required for remote models");
  }
  if (!(eval_fraction > 0.0 && eval_fraction < 1.0)) {
    throw Error(ErrorKind::config, "dataset.eval_fraction must lie in (0, 1)");
  }
  es.validate();
  if (histogram_bins < 2) throw Error(ErrorKind::config, "histogram_bins must be >= 2");
  if (threads < 1) throw Error(ErrorKind::config, "threads must be >= 1");
  if (output_dir.empty()) throw Error(ErrorKind::config, "output_dir must not be empty");
}

namespace {

enum class Kind { string, number, integer, boolean, object };

std::string_view kind_name(Kind k) {
  switch (k) {
    case Kind::string: return "a string";
    case Kind::number: return "a number";
    case Kind::integer: return "a non-negative integer";
    case Kind::boolean: return "a boolean";
    case Kind::object: return "an object";
  }
  return "a value";
}

bool matches(const json& v, Kind k) {
  switch (k) {
    case Kind::string: return v.is_string();
    case Kind::number: return v.is_number();
    case Kind::integer: return v.is_number_unsigned();
    case Kind::boolean: return v.is_boolean();
    case Kind::object: return v.is_object();
  }
  return false;
}

struct Field {
  std::string_view key;
  Kind kind;
};

using Schema = std::span<const Field>;

void check_schema(const json& j, const std::string& where, Schema fields) {
  if (!j.is_object()) throw Error(ErrorKind::config, where + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    const auto it = std::find_if(fields.begin(), fields.end(), [&](const Field& f) { return f.key == key; });
    if (it == fields.end()) throw Error(ErrorKind::config, fmt::format("{}.{}: unknown key", where, key));
    if (!matches(value, it->kind)) {
      throw Error(ErrorKind::config, fmt::format("{}.{}: expected {}", where, key, kind_name(it->kind)));
    }
  }
}

constexpr Field kTopSchema[]{{"run_name", Kind::string},       {"seed", Kind::integer},
                            {"model", Kind::object},          {"dataset", Kind::object},
                            {"es", Kind::object},             {"reward", Kind::string},
                            {"eval_every", Kind::integer},    {"checkpoint_every", Kind::integer},
                            {"protocol", Kind::string},       {"histogram_bins", Kind::integer},
                            {"output_dir", Kind::string},     {"threads", Kind::integer}};
constexpr Field kModelSchema[]{{"kind", Kind::string}, {"surrogate", Kind::object}, {"endpoint", Kind::object}};
constexpr Field kSurrogateSchema[]{{"dim", Kind::integer},
                                  {"facts", Kind::integer},
                                  {"tau", Kind::number},
                                  {"format_noise", Kind::number},
                                  {"init_scale", Kind::number}};
constexpr Field kEndpointSchema[]{{"base_url", Kind::string},        {"model", Kind::string},
                                 {"token_env", Kind::string},       {"temperature", Kind::number},
                                 {"max_concurrent", Kind::integer}, {"timeout_seconds", Kind::number},
                                 {"cache_dir", Kind::string},       {"request_logprobs", Kind::boolean},
                                 {"max_attempts", Kind::integer},   {"backoff_seconds", Kind::number},
                                 {"requests_per_second", Kind::number}};
constexpr Field kDatasetSchema[]{{"path", Kind::string}, {"eval_fraction", Kind::number}};
constexpr Field kEsSchema[]{{"sigma", Kind::number},          {"alpha", Kind::number},
                           {"generations", Kind::integer},   {"population", Kind::integer},
                           {"batch_size", Kind::integer},    {"antithetic", Kind::boolean},
                           {"resample_batch", Kind::boolean}};

}  // namespace

RunConfig parse_run_config(const json& j) {
  check_schema(j, "config", kTopSchema);
  RunConfig c;
  if (j.contains("run_name")) c.run_name = j["run_name"].get<std::string>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("model")) {
    const json& m = j["model"];
    check_schema(m, "config.model", kModelSchema);
    const std::string kind = m.value("kind", std::string("surrogate"));
    if (kind == "surrogate") {
      c.model = ModelKind::surrogate;
      if (m.contains("endpoint")) throw Error(ErrorKind::config, "config.model.endpoint: only valid with kind \"remote\"");
    } else if (kind == "remote") {
      c.model = ModelKind::remote;
      if (m.contains("surrogate")) {
        throw Error(ErrorKind::config, "config.model.surrogate: only valid with kind \"surrogate\"");
      }
    } else {
      throw Error(ErrorKind::config, "config.model.kind: expected \"surrogate\" or \"remote\", got \"" + kind + "\"");
    }
    if (m.contains("surrogate")) {
      check_schema(m["surrogate"], "config.model.surrogate", kSurrogateSchema);
      c.surrogate = m["surrogate"].get<surrogate::SurrogateConfig>();
    }
    if (m.contains("endpoint")) {
      check_schema(m["endpoint"], "config.model.endpoint", kEndpointSchema);
      remote::merge_from_json(m["endpoint"], c.endpoint);
    }
  }
  if (j.contains("dataset")) {
    const json& d = j["dataset"];
    check_schema(d, "config.dataset", kDatasetSchema);
    if (d.contains("path")) c.dataset_path = d["path"].get<std::string>();
    if (d.contains("eval_fraction")) c.eval_fraction = d["eval_fraction"].get<double>();
  }
  if (j.contains("es")) {
    check_schema(j["es"], "config.es", kEsSchema);
    es::merge_from_json(j["es"], c.es);
  }
  if (j.contains("reward")) c.es.reward = parse_reward_variant(j["reward"].get<std::string>());
  if (j.contains("eval_every")) c.eval_every = j["eval_every"].get<std::size_t>();
  if (j.contains("checkpoint_every")) c.checkpoint_every = j["checkpoint_every"].get<std::size_t>();
  if (j.contains("protocol")) c.protocol = remote::parse_protocol(j["protocol"].get<std::string>());
  if (j.contains("histogram_bins")) c.histogram_bins = j["histogram_bins"].get<std::size_t>();
  if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();
  if (j.contains("threads")) c.threads = j["threads"].get<std::size_t>();
  c.es.threads = c.threads;
  c.es.master_seed = Seeds::derive(c.seed).es;
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  json j;
  try {
    j = json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::config, fmt::format("{}: invalid JSON: {}", path.string(), e.what()));
  }
  return parse_run_config(j);
}

json to_json(const RunConfig& c) {
  json model{{"kind", to_string(c.model)}};
  if (c.model == ModelKind::surrogate) {
    model["surrogate"] = c.surrogate;
  } else {
    json endpoint;
    remote::to_json(endpoint, c.endpoint);
    model["endpoint"] = endpoint;
  }
  json dataset{{"eval_fraction", c.eval_fraction}};
  if (!c.dataset_path.empty()) dataset["path"] = c.dataset_path;
  const json es{{"sigma", c.es.sigma},
                {"alpha", c.es.alpha},
                {"generations", c.es.generations},
                {"population", c.es.population},
                {"batch_size", c.es.batch_size},
                {"antithetic", c.es.antithetic},
                {"resample_batch", c.es.resample_batch}};
  return json{{"run_name", c.run_name},
              {"seed", c.seed},
              {"model", model},
              {"dataset", dataset},
              {"es", es},
              {"reward", to_string(c.es.reward)},
              {"eval_every", c.eval_every},
              {"checkpoint_every", c.checkpoint_every},
              {"protocol", remote::to_string(c.protocol)},
              {"histogram_bins", c.histogram_bins},
              {"output_dir", c.output_dir.string()},
              {"threads", c.threads}};
}

Seeds Seeds::derive(std::uint64_t master) {
  return {derive_seed(master, "world"), derive_seed(master, "init"), derive_seed(master, "split"),
          derive_seed(master, "es")};
}

namespace {

struct SurrogateSetup {
  std::shared_ptr<const surrogate::SurrogateWorld> world;
  std::shared_ptr<const surrogate::SurrogateModel> model;
  DatasetSplit split;
  ParamVector theta0;
};

SurrogateSetup setup_surrogate(const RunConfig& cfg) {
  if (cfg.model != ModelKind::surrogate) {
    throw Error(ErrorKind::config, "this command needs parameter access; remote models can only be evaluated");
  }
  const Seeds seeds = Seeds::derive(cfg.seed);
  auto world = std::make_shared<const surrogate::SurrogateWorld>(surrogate::SurrogateWorld::make(cfg.surrogate, seeds.world));
  auto model = std::make_shared<const surrogate::SurrogateModel>(world);
  const Dataset all = surrogate::make_dataset(*world);
  return {world, model, split_dataset(all, cfg.eval_fraction, seeds.split),
          surrogate::init_params(cfg.surrogate, seeds.init)};
}

es::EsConfig resolved_es(const RunConfig& cfg) {
  es::EsConfig c = cfg.es;
  c.master_seed = Seeds::derive(cfg.seed).es;
  c.threads = cfg.threads;
  return c;
}

std::vector<EvalRecord> surrogate_records(const ParametricModel& model, std::span<const double> theta,
                                          const Dataset& data, remote::Protocol protocol, std::size_t threads) {
  auto records = evaluate_model(model, theta, data, protocol != remote::Protocol::dual, threads);
  if (protocol == remote::Protocol::idk) {
    for (auto& r : records) {
      r.correct = r.idk->correct;
      r.meta = r.idk->meta_yes() ? MetaAnswer::yes : MetaAnswer::no;
      r.confidence.reset();
    }
  }
  return records;
}

std::vector<std::string> write_eval_outputs(const fs::path& dir, const EvalReport& rep, std::size_t bins,
                                            const std::string& suffix) {
  std::vector<std::string> files;
  auto put = [&](const std::string& name, const std::string& content) {
    io::write_file_atomic(dir / name, content);
    files.push_back(name);
  };
  put("metrics" + suffix + ".csv", io::metrics_csv(rep.metrics));
  put("records" + suffix + ".jsonl", io::records_jsonl(rep.records));
  if (rep.metrics.auc) put("roc" + suffix + ".csv", io::roc_csv(sdt::roc_curve(rep.records)));
  const bool confident = std::all_of(rep.records.begin(), rep.records.end(),
                                     [](const EvalRecord& r) { return !r.parsed() || r.confidence.has_value(); });
  if (confident) put("density" + suffix + ".csv", io::density_csv(sdt::density_histogram(rep.records, bins)));
  if (rep.idk) put("idk" + suffix + ".csv", io::idk_csv(*rep.idk));
  return files;
}

class Manifest {
 public:
  Manifest(std::string_view command, const RunConfig& cfg) {
    const Seeds s = Seeds::derive(cfg.seed);
    doc_ = json{{"artifact_version", kArtifactVersion},
                {"command", command},
                {"config", to_json(cfg)},
                {"seeds", {{"world", s.world}, {"init", s.init}, {"split", s.split}, {"es", s.es}}},
                {"datasets", json::array()},
                {"started_at", io::utc_timestamp()}};
  }

  json& doc() { return doc_; }

  void add_dataset(std::string_view role, const Dataset& d) {
    doc_["datasets"].push_back({{"role", role}, {"source", d.source_path}, {"sha256", d.content_hash}, {"items", d.size()}});
  }

  void add_outputs(const std::vector<std::string>& files) { files_.insert(files_.end(), files.begin(), files.end()); }

  void write(const fs::path& dir, std::string_view status = "complete") {
    std::sort(files_.begin(), files_.end());
    files_.erase(std::unique(files_.begin(), files_.end()), files_.end());
    json outputs = json::array();
    for (const auto& f : files_) outputs.push_back({{"path", f}, {"sha256", sha256_file(dir / f)}});
    doc_["outputs"] = std::move(outputs);
    doc_["status"] = status;
    doc_["finished_at"] = io::utc_timestamp();
    io::write_file_atomic(dir / "manifest.json", doc_.dump(2) + "\n");
  }

 private:
  json doc_;
  std::vector<std::string> files_;
};

std::string checkpoint_stem(std::size_t generation) { return fmt::format("gen_{:06d}", generation); }

std::optional<fs::path> latest_checkpoint(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return std::nullopt;
  std::optional<std::pair<std::size_t, fs::path>> best;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() <= 9 || !name.starts_with("gen_") || !name.ends_with(".json")) continue;
    const std::string digits = name.substr(4, name.size() - 9);
    if (!std::all_of(digits.begin(), digits.end(), [](char ch) { return ch >= '0' && ch <= '9'; })) continue;
    const std::size_t g = std::stoull(digits);
    if (!best || g > best->first) best = {g, entry.path()};
  }
  if (!best) return std::nullopt;
  return best->second;
}

void remove_generation_checkpoints(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return;
  std::vector<fs::path> stale;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().filename().string().starts_with("gen_")) stale.push_back(entry.path());
  }
  for (const auto& p : stale) fs::remove(p);
}

std::string trajectory_csv(std::span<const es::TrajectoryRow> rows) {
  std::string out = fmt::format("generation,mean_fitness,std_fitness,{}\n", io::kMetricsHeader);
  const std::string blank(std::count(io::kMetricsHeader.begin(), io::kMetricsHeader.end(), ','), ',');
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{}\n", r.generation, io::format_number(r.mean_fitness),
                       io::format_number(r.std_fitness), r.metrics ? io::metrics_csv_fields(*r.metrics) : blank);
  }
  return out;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

double parse_percent(const std::string& token) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(token.c_str(), &end);
  if (token.empty() || end != token.c_str() + token.size() || errno != 0 || !(v >= 0.0 && v <= 100.0)) {
    throw Error(ErrorKind::config, "grid: '" + token + "' is not a percentage in [0, 100]");
  }
  return v;
}

}  // namespace

EvalReport summarize(std::vector<EvalRecord> records, remote::Protocol protocol) {
  EvalReport rep;
  rep.metrics = sdt::behavioral_metrics(records);
  if (!rep.metrics.d_type2) {
    rep.warnings.push_back(rep.metrics.accuracy == 0.0
                               ? "d' undefined: no correct answers among parsed records (metrics still written)"
                               : "d' undefined: no incorrect answers among parsed records (metrics still written)");
  }
  if (rep.metrics.n_unparseable > 0) {
    rep.warnings.push_back(fmt::format("{} unparseable meta answers excluded", rep.metrics.n_unparseable));
  }
  if (protocol != remote::Protocol::dual) rep.idk = sdt::idk_metrics(records);
  rep.records = std::move(records);
  return rep;
}

EvalReport cmd_eval(const RunConfig& cfg, const std::optional<fs::path>& checkpoint) {
  cfg.validate();
  Manifest manifest("eval", cfg);
  EvalReport rep;
  if (cfg.model == ModelKind::surrogate) {
    const auto su = setup_surrogate(cfg);
    ParamVector theta = su.theta0;
    if (checkpoint) {
      Checkpoint ck = read_checkpoint(*checkpoint);
      if (ck.theta.size() != su.model->dimension()) {
        throw Error(ErrorKind::data, fmt::format("checkpoint {} has dimension {}, model expects {}",
                                                 checkpoint->string(), ck.theta.size(), su.model->dimension()));
      }
      manifest.doc()["checkpoint"] = {{"path", checkpoint->string()},
                                      {"generation", ck.generation},
                                      {"sha256", sha256_file(*checkpoint)}};
      theta = std::move(ck.theta);
    }
    rep = summarize(surrogate_records(*su.model, theta, su.split.eval, cfg.protocol, cfg.threads), cfg.protocol);
    manifest.doc()["world"] = su.world->manifest();
    manifest.add_dataset("train", su.split.train);
    manifest.add_dataset("eval", su.split.eval);
  } else {
    if (checkpoint) throw Error(ErrorKind::config, "remote models have no checkpoints");
    const Dataset data = load_dataset(cfg.dataset_path);
    auto res = remote::evaluate_remote(cfg.endpoint, data, cfg.protocol);
    if (res.records.empty()) {
      throw Error(ErrorKind::data,
                  fmt::format("remote evaluation produced no records ({} items failed)", res.failed_ids.size()));
    }
    rep = summarize(std::move(res.records), cfg.protocol);
    rep.failed_ids = std::move(res.failed_ids);
    rep.network_requests = res.network_requests;
    rep.cache_hits = res.cache_hits;
    if (!rep.failed_ids.empty()) {
      rep.warnings.push_back(fmt::format("{} items failed after retries and were excluded", rep.failed_ids.size()));
    }
    manifest.add_dataset("eval", data);
    manifest.doc()["remote"] = {{"failed_ids", rep.failed_ids},
                                {"network_requests", rep.network_requests},
                                {"cache_hits", rep.cache_hits}};
  }
  manifest.add_outputs(write_eval_outputs(cfg.output_dir, rep, cfg.histogram_bins, ""));
  manifest.write(cfg.output_dir);
  return rep;
}

TrainReport cmd_train(const RunConfig& cfg, const TrainCommandOptions& options) {
  cfg.validate();
  const auto su = setup_surrogate(cfg);
  const es::EsConfig es_cfg = resolved_es(cfg);
  const fs::path out = cfg.output_dir;
  const fs::path ckpt_dir = out / "checkpoints";

  Manifest manifest("train", cfg);
  manifest.doc()["world"] = su.world->manifest();
  manifest.add_dataset("train", su.split.train);
  manifest.add_dataset("eval", su.split.eval);

  std::vector<std::string> files;
  auto save = [&](const es::TrainState& st, const std::string& stem) {
    write_checkpoint(ckpt_dir / (stem + ".json"), Checkpoint{st.generation, es_cfg.master_seed, st.theta, st.trajectory});
    files.push_back("checkpoints/" + stem + ".json");
    files.push_back("checkpoints/" + stem + ".bin");
  };

  TrainReport report;
  report.initial =
      summarize(surrogate_records(*su.model, su.theta0, su.split.eval, cfg.protocol, cfg.threads), cfg.protocol);
  {
    auto written = write_eval_outputs(out, report.initial, cfg.histogram_bins, "_initial");
    files.insert(files.end(), written.begin(), written.end());
  }

  es::TrainState start{0, su.theta0, {}};
  if (options.resume) {
    if (const auto latest = latest_checkpoint(ckpt_dir)) {
      Checkpoint ck = read_checkpoint(*latest);
      if (ck.master_seed != es_cfg.master_seed) {
        throw Error(ErrorKind::data, fmt::format("{} was written by a run with a different seed", latest->string()));
      }
      if (ck.theta.size() != su.model->dimension()) {
        throw Error(ErrorKind::data, fmt::format("{} has dimension {}, model expects {}", latest->string(),
                                                 ck.theta.size(), su.model->dimension()));
      }
      start = {ck.generation, std::move(ck.theta), std::move(ck.trajectory)};
      manifest.doc()["resumed_from"] = {{"path", latest->string()}, {"generation", start.generation}};
    }
  } else {
    remove_generation_checkpoints(ckpt_dir);
  }
  save(es::TrainState{0, su.theta0, {}}, "initial");

  es::TrainOptions topt;
  topt.eval_every = cfg.eval_every;
  topt.checkpoint_every = cfg.checkpoint_every;
  topt.on_checkpoint = [&](const es::TrainState& st) { save(st, checkpoint_stem(st.generation)); };
  topt.stop_at = options.stop_at;

  es::TrainResult result = es::train_esma(*su.model, su.split.train, su.split.eval, std::move(start), es_cfg, topt);
  report.generation = result.state.generation;
  report.completed = result.completed;

  io::write_file_atomic(out / "trajectory.csv", trajectory_csv(result.state.trajectory));
  files.push_back("trajectory.csv");

  if (!result.completed) {
    save(result.state, checkpoint_stem(result.state.generation));
    report.theta = std::move(result.state.theta);
    manifest.add_outputs(files);
    manifest.write(out, "interrupted");
    return report;
  }

  save(result.state, "final");
  report.final_report = summarize(
      surrogate_records(*su.model, result.state.theta, su.split.eval, cfg.protocol, cfg.threads), cfg.protocol);
  {
    auto written = write_eval_outputs(out, *report.final_report, cfg.histogram_bins, "");
    files.insert(files.end(), written.begin(), written.end());
  }
  report.theta = std::move(result.state.theta);
  manifest.add_outputs(files);
  manifest.write(out);
  return report;
}

std::vector<patch::GridPoint> parse_grid(std::string_view text) {
  std::vector<double> percents;
  for (const auto& token : io::split_csv_line(text)) percents.push_back(parse_percent(token));
  if (percents.empty()) throw Error(ErrorKind::config, "grid: no percentages given");
  std::vector<patch::GridPoint> grid;
  for (auto d : {patch::Direction::top, patch::Direction::bottom}) {
    for (double p : percents) grid.push_back({p, d});
  }
  return grid;
}

patch::PatchReport cmd_patch_sweep(const RunConfig& cfg, const fs::path& base_checkpoint,
                                   const fs::path& tuned_checkpoint, std::span<const patch::GridPoint> grid) {
  cfg.validate();
  const auto su = setup_surrogate(cfg);
  const Checkpoint base = read_checkpoint(base_checkpoint);
  const Checkpoint tuned = read_checkpoint(tuned_checkpoint);
  if (base.theta.size() != tuned.theta.size()) {
    throw Error(ErrorKind::data, fmt::format("dimension mismatch: base has {}, tuned has {}", base.theta.size(),
                                             tuned.theta.size()));
  }
  if (base.theta.size() != su.model->dimension()) {
    throw Error(ErrorKind::data, fmt::format("checkpoints have dimension {}, model expects {}", base.theta.size(),
                                             su.model->dimension()));
  }

  const auto& model = *su.model;
  const auto& eval = su.split.eval;
  const patch::Evaluator evaluate = [&](std::span<const double> theta) {
    return sdt::behavioral_metrics(evaluate_model(model, theta, eval, false, 1));
  };
  patch::PatchReport report = patch::patch_sweep(base.theta, tuned.theta, grid, evaluate, cfg.threads);

  Manifest manifest("patch-sweep", cfg);
  manifest.doc()["world"] = su.world->manifest();
  manifest.add_dataset("eval", eval);
  manifest.doc()["checkpoints"] = {
      {"base", {{"path", base_checkpoint.string()}, {"sha256", sha256_file(base_checkpoint)}}},
      {"tuned", {{"path", tuned_checkpoint.string()}, {"sha256", sha256_file(tuned_checkpoint)}}}};
  io::write_file_atomic(cfg.output_dir / "patch_report.csv", patch::report_csv(report));
  manifest.add_outputs({"patch_report.csv"});
  manifest.write(cfg.output_dir);
  return report;
}

sdt::RocCurve cmd_roc(const fs::path& records, const fs::path& out_dir, std::size_t histogram_bins) {
  const auto recs = io::read_records_jsonl(records);
  sdt::RocCurve curve = sdt::roc_curve(recs);
  io::write_file_atomic(out_dir / "roc.csv", io::roc_csv(curve));
  io::write_file_atomic(out_dir / "density.csv", io::density_csv(sdt::density_histogram(recs, histogram_bins)));
  return curve;
}

json verify_manifest(const fs::path& run_dir) {
  const fs::path path = run_dir / "manifest.json";
  std::error_code ec;
  if (!fs::exists(path, ec)) throw Error(ErrorKind::io, "missing manifest: " + path.string());
  json manifest;
  try {
    manifest = json::parse(io::read_file(path));
    for (const auto& entry : manifest.at("outputs")) {
      const fs::path file = run_dir / entry.at("path").get<std::string>();
      if (!fs::exists(file, ec)) throw Error(ErrorKind::data, "manifest lists missing output " + file.string());
      if (sha256_file(file) != entry.at("sha256").get<std::string>()) {
        throw Error(ErrorKind::data, "digest mismatch for " + file.string());
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::data, fmt::format("corrupt manifest {}: {}", path.string(), e.what()));
  }
  return manifest;
}

std::string cmd_report(std::span<const fs::path> run_dirs, const fs::path& out_csv) {
  if (run_dirs.empty()) throw Error(ErrorKind::config, "report: no run directories given");
  std::string out = std::string(kReportHeader) + "\n";
  std::set<std::string> seen;
  for (const auto& dir : run_dirs) {
    const json manifest = verify_manifest(dir);
    const fs::path metrics_path = dir / "metrics.csv";
    std::error_code ec;
    if (!fs::exists(metrics_path, ec)) {
      throw Error(ErrorKind::data, "no metrics.csv in " + dir.string() + " (interrupted run?)");
    }
    const sdt::MetricsSummary m = io::read_metrics_csv(metrics_path);

    std::string idk_fields = "nan,nan,nan";
    if (fs::exists(dir / "idk.csv", ec)) {
      const std::string text = io::read_file(dir / "idk.csv");
      const auto nl = text.find('\n');
      const auto row = io::split_csv_line(text.substr(nl + 1, text.find('\n', nl + 1) - nl - 1));
      if (row.size() < 3) throw Error(ErrorKind::data, "malformed idk.csv in " + dir.string());
      idk_fields = fmt::format("{},{},{}", row[0], row[1], row[2]);
    }

    std::string run_name = dir.filename().string();
    std::string model = "unknown";
    try {
      const json& cfg = manifest.at("config");
      run_name = cfg.at("run_name").get<std::string>();
      model = cfg.at("model").at("kind").get<std::string>();
      if (model == "remote") model += ":" + cfg.at("model").at("endpoint").at("model").get<std::string>();
    } catch (const json::exception& e) {
      throw Error(ErrorKind::data, fmt::format("corrupt manifest in {}: {}", dir.string(), e.what()));
    }
    // Runs sharing a run_name (e.g. redirected with --out) are told apart by directory.
    if (!seen.insert(run_name).second) {
      fs::path leaf = dir.lexically_normal();
      if (leaf.filename().empty()) leaf = leaf.parent_path();
      run_name += "@" + leaf.filename().string();
    }
    out += fmt::format("{},{},{},{}\n", csv_escape(run_name), csv_escape(model), io::metrics_csv_fields(m), idk_fields);
  }
  io::write_file_atomic(out_csv, out);
  return out;
}

}  // namespace esma::runner
