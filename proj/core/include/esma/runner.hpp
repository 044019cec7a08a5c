#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "esma/es.hpp"
#include "esma/patch.hpp"
#include "esma/remote.hpp"
#include "esma/sdt.hpp"
#include "esma/surrogate.hpp"

namespace esma::runner {

inline constexpr std::string_view kArtifactVersion = "0.1.0";

enum class ModelKind { surrogate, remote };

std::string_view to_string(ModelKind k);

struct RunConfig {
  std::string run_name = "run";
  std::uint64_t seed = 0;
  ModelKind model = ModelKind::surrogate;
  surrogate::SurrogateConfig surrogate;
  remote::EndpointConfig endpoint;
  /// JSONL QA file; required for remote models, rejected for the surrogate
  /// (its facts are generated from the seed).
  std::string dataset_path;
  double eval_fraction = 0.2;
  /// master_seed is ignored here and derived from `seed`; reward lives in es.reward.
  es::EsConfig es = es::EsConfig::surrogate_defaults();
  std::size_t eval_every = 25;
  std::size_t checkpoint_every = 50;
  remote::Protocol protocol = remote::Protocol::both;
  std::size_t histogram_bins = 20;
  std::filesystem::path output_dir = "runs/run";
  /// Worker count for fitness and evaluation. Never changes results.
  std::size_t threads = 1;

  void validate() const;
};

/// Strict: unknown keys and wrong value types are config errors naming the
/// offending JSON path.
RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
/// Fully resolved form; parse_run_config(to_json(c)) == c.
nlohmann::json to_json(const RunConfig& c);

/// Independent substreams of the master seed.
struct Seeds {
  std::uint64_t world = 0;
  std::uint64_t init = 0;
  std::uint64_t split = 0;
  std::uint64_t es = 0;

  static Seeds derive(std::uint64_t master);
};

struct EvalReport {
  std::vector<EvalRecord> records;
  sdt::MetricsSummary metrics;
  std::optional<sdt::IdkMetrics> idk;
  std::vector<std::string> failed_ids;
  std::size_t network_requests = 0;
  std::size_t cache_hits = 0;
  std::vector<std::string> warnings;
};

/// Builds the report for a set of records (metrics, IDK metrics, warnings).
EvalReport summarize(std::vector<EvalRecord> records, remote::Protocol protocol);

/// Surrogate: evaluates the eval split at theta_0, or at the checkpoint when
/// given. Remote: queries the endpoint over the whole dataset. Writes
/// metrics.csv, records.jsonl, roc.csv, density.csv, idk.csv and manifest.json.
EvalReport cmd_eval(const RunConfig& cfg, const std::optional<std::filesystem::path>& checkpoint = std::nullopt);

struct TrainCommandOptions {
  /// Continue from the newest checkpoint in <out>/checkpoints.
  bool resume = false;
  /// Stop (resumably) once this generation has been reached.
  std::optional<std::size_t> stop_at;
};

struct TrainReport {
  EvalReport initial;
  /// Absent when the run stopped early.
  std::optional<EvalReport> final_report;
  std::size_t generation = 0;
  ParamVector theta;
  bool completed = false;
};

TrainReport cmd_train(const RunConfig& cfg, const TrainCommandOptions& options = {});

/// Comma-separated percentages, expanded to both directions.
std::vector<patch::GridPoint> parse_grid(std::string_view text);

/// Evaluates base + sparse delta on the surrogate eval split and writes
/// patch_report.csv and manifest.json.
patch::PatchReport cmd_patch_sweep(const RunConfig& cfg, const std::filesystem::path& base_checkpoint,
                                   const std::filesystem::path& tuned_checkpoint,
                                   std::span<const patch::GridPoint> grid);

/// ROC and density of a records file, written to out_dir/roc.csv and
/// out_dir/density.csv.
sdt::RocCurve cmd_roc(const std::filesystem::path& records, const std::filesystem::path& out_dir,
                      std::size_t histogram_bins = 20);

/// Throws Error(data) unless every output listed in the manifest exists and
/// matches its digest. Returns the manifest.
nlohmann::json verify_manifest(const std::filesystem::path& run_dir);

/// One row per run directory; returns the CSV text after writing it.
std::string cmd_report(std::span<const std::filesystem::path> run_dirs, const std::filesystem::path& out_csv);

inline constexpr std::string_view kReportHeader =
    "run,model,d_type2,raw_alignment,accuracy,yes_ratio,yfr,nfr,auc,n,n_unparseable,idk_accuracy,idk_alignment,"
    "all_alignment";

}  // namespace esma::runner
