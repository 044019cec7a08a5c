// esma: evaluate, train and inspect metacognitive alignment runs.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "esma/error.hpp"
#include "esma/io.hpp"
#include "esma/runner.hpp"

namespace fs = std::filesystem;
using namespace esma;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string protocol;
  std::string reward;
  std::optional<std::size_t> threads;
};

void add_common(CLI::App* cmd, Common& c, bool training) {
  cmd->add_option("--config", c.config, "Run config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "Master seed (overrides the config)");
  cmd->add_option("--out", c.out, "Output directory (overrides the config)");
  cmd->add_option("--threads", c.threads, "Worker threads");
  if (training) {
    cmd->add_option("--reward", c.reward, "Reward variant")->check(CLI::IsMember({"joint", "direct", "meta"}));
  }
  cmd->add_option("--protocol", c.protocol, "Evaluation protocol")->check(CLI::IsMember({"dual", "idk", "both"}));
}

runner::RunConfig resolve(const Common& c) {
  runner::RunConfig cfg = runner::load_run_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (!c.out.empty()) cfg.output_dir = c.out;
  if (!c.protocol.empty()) cfg.protocol = remote::parse_protocol(c.protocol);
  if (!c.reward.empty()) cfg.es.reward = parse_reward_variant(c.reward);
  if (c.threads) cfg.threads = *c.threads;
  // Re-parse so derived fields (ES seed, thread counts) follow the overrides.
  return runner::parse_run_config(runner::to_json(cfg));
}

void print_metrics(const std::string& label, const sdt::MetricsSummary& m) {
  fmt::print("{}: d'={} raw_alignment={} accuracy={} yes_ratio={} auc={} n={}\n", label,
             io::format_number(m.d_type2), io::format_number(m.raw_alignment), io::format_number(m.accuracy),
             io::format_number(m.yes_ratio), io::format_number(m.auc), m.n_records);
}

void print_report(const std::string& label, const runner::EvalReport& r) {
  for (const auto& w : r.warnings) fmt::print(stderr, "warning: {}\n", w);
  print_metrics(label, r.metrics);
  if (r.idk) {
    fmt::print("{} idk: accuracy={} alignment={} all_alignment={}\n", label, io::format_number(r.idk->idk_accuracy),
               io::format_number(r.idk->idk_alignment), io::format_number(r.idk->all_alignment));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evolution-strategy metacognitive alignment toolkit"};
  app.require_subcommand(1);

  Common eval_opts;
  std::string eval_checkpoint;
  auto* eval = app.add_subcommand("eval", "Dual-prompt (and IDK) evaluation");
  add_common(eval, eval_opts, false);
  eval->add_option("--checkpoint", eval_checkpoint, "Evaluate these parameters (surrogate)");

  Common remote_opts;
  auto* remote_eval = app.add_subcommand("remote-eval", "Evaluate a chat-completions endpoint");
  add_common(remote_eval, remote_opts, false);

  Common train_opts;
  bool resume = false;
  std::optional<std::size_t> stop_at;
  std::optional<std::size_t> generations;
  auto* train = app.add_subcommand("train", "Run ES training on the surrogate");
  add_common(train, train_opts, true);
  train->add_flag("--resume", resume, "Continue from the newest checkpoint");
  train->add_option("--stop-at", stop_at, "Stop after this generation (resumable)");
  train->add_option("--generations", generations, "Override es.generations");

  Common patch_opts;
  std::string base, tuned, grid = "0,10,20,30,40,50,60,70,80,90,100";
  auto* patch = app.add_subcommand("patch-sweep", "Sparse weight-patching sweep");
  add_common(patch, patch_opts, false);
  patch->add_option("--base", base, "Base checkpoint")->required();
  patch->add_option("--tuned", tuned, "Tuned checkpoint")->required();
  patch->add_option("--grid", grid, "Comma-separated patch percentages");

  std::string records, roc_out = ".";
  std::size_t bins = 20;
  auto* roc = app.add_subcommand("roc", "Type-2 ROC of a records file");
  roc->add_option("--records", records, "records.jsonl")->required()->check(CLI::ExistingFile);
  roc->add_option("--out", roc_out, "Output directory");
  roc->add_option("--bins", bins, "Density histogram bins");

  std::vector<std::string> run_dirs;
  std::string report_out = "comparison.csv";
  auto* report = app.add_subcommand("report", "Compare finished runs");
  report->add_option("runs", run_dirs, "Run directories")->required();
  report->add_option("--out", report_out, "Comparison CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: usage: " << e.what() << "\n";
    return 2;
  }

  try {
    if (*eval || *remote_eval) {
      const bool is_remote = remote_eval->parsed();
      const auto cfg = resolve(is_remote ? remote_opts : eval_opts);
      if (is_remote && cfg.model != runner::ModelKind::remote) {
        throw Error(ErrorKind::config, "remote-eval needs model.kind = \"remote\"");
      }
      std::optional<fs::path> ckpt;
      if (!eval_checkpoint.empty()) ckpt = eval_checkpoint;
      const auto r = runner::cmd_eval(cfg, ckpt);
      print_report("eval", r);
      if (is_remote || cfg.model == runner::ModelKind::remote) {
        fmt::print("requests={} cache_hits={} failed={}\n", r.network_requests, r.cache_hits, r.failed_ids.size());
      }
      fmt::print("wrote {}\n", cfg.output_dir.string());
    } else if (*train) {
      auto cfg = resolve(train_opts);
      if (generations) cfg.es.generations = *generations;
      const auto r = runner::cmd_train(cfg, {resume, stop_at});
      print_report("initial", r.initial);
      if (r.final_report) {
        print_report("final", *r.final_report);
      } else {
        fmt::print("stopped at generation {}; rerun with --resume to continue\n", r.generation);
      }
      fmt::print("wrote {}\n", cfg.output_dir.string());
    } else if (*patch) {
      const auto cfg = resolve(patch_opts);
      const auto points = runner::parse_grid(grid);
      const auto r = runner::cmd_patch_sweep(cfg, base, tuned, points);
      for (const auto& row : r.rows) {
        fmt::print("{} {:>5}%: d'={} accuracy={}\n", patch::to_string(row.direction), row.percent,
                   io::format_number(row.metrics.d_type2), io::format_number(row.metrics.accuracy));
      }
      fmt::print("wrote {}\n", (cfg.output_dir / "patch_report.csv").string());
    } else if (*roc) {
      const auto curve = runner::cmd_roc(records, roc_out, bins);
      fmt::print("auc={} points={}\n", io::format_number(sdt::auc(curve)), curve.points.size());
    } else if (*report) {
      std::vector<fs::path> dirs(run_dirs.begin(), run_dirs.end());
      std::cout << runner::cmd_report(dirs, report_out);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.kind()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
