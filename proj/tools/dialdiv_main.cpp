// dialdiv: run dialogue simulations with attention-guided prompt pruning and
// measure their diversity.

#include <cstdlib>
#include <iostream>
#include <memory>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "dialdiv/backend.hpp"
#include "dialdiv/corpus.hpp"
#include "dialdiv/dialogue.hpp"
#include "dialdiv/errors.hpp"
#include "dialdiv/experiment.hpp"
#include "dialdiv/report.hpp"
#include "dialdiv/text.hpp"
#include "dialdiv/wire.hpp"

namespace {

using namespace dialdiv;

struct BackendOpts {
  std::string kind = "mock";
  std::string url;
  std::string judge = "same";
  int timeout = 120;
  int retries = 2;

  void add(CLI::App* app) {
    app->add_option("--backend", kind, "mock or remote")->check(CLI::IsMember({"mock", "remote"}));
    app->add_option("--backend-url", url, std::string("sidecar URL (default: $") + backend::kBackendUrlEnv + ")");
    app->add_option("--judge-backend", judge, "same, mock, or a sidecar URL");
    app->add_option("--timeout", timeout, "request timeout in seconds");
    app->add_option("--retries", retries, "request retries");
  }

  std::string resolved_url() const {
    if (!url.empty()) return url;
    if (const char* env = std::getenv(backend::kBackendUrlEnv)) return env;
    return backend::RemoteConfig{}.url;
  }

  std::unique_ptr<backend::GenerationBackend> make(const std::string& which, const std::string& u) const {
    if (which == "mock") return std::make_unique<backend::MockBackend>();
    return std::make_unique<backend::RemoteBackend>(
        backend::RemoteConfig{u, std::chrono::seconds(timeout), retries});
  }
};

struct Backends {
  std::unique_ptr<backend::GenerationBackend> gen;
  std::unique_ptr<backend::GenerationBackend> judge;
  dialogue::Backends view() const { return {gen.get(), judge ? judge.get() : nullptr}; }
};

Backends open_backends(const BackendOpts& o) {
  Backends b;
  b.gen = o.make(o.kind, o.resolved_url());
  if (o.judge == "mock") b.judge = o.make("mock", "");
  else if (o.judge != "same") b.judge = o.make("remote", o.judge);
  return b;
}

struct ConditionOpts {
  double lambda = 0.0;
  std::string order = "bpmec";
  std::string ablate;
  std::string strategy = "desc";
  std::string retain_one;
  std::string revise = "off";
  double theta = 6.67;
  bool sequential = false;
  std::optional<double> temperature;
  std::optional<double> top_p;
  std::string reducer = "sum_mean";
  bool post_removal = false;
  bool full_inconsistency = false;

  void add(CLI::App* app) {
    app->add_option("--lambda", lambda, "pruning strength in [0,1]")->check(CLI::Range(0.0, 1.0));
    app->add_option("--order", order, "content block order, e.g. bpmec");
    app->add_option("--ablate", ablate, "blocks to drop, e.g. bmpe");
    app->add_option("--strategy", strategy, "desc or asc")->check(CLI::IsMember({"desc", "asc"}));
    app->add_option("--retain-one", retain_one, "<block>:<Hi|Lo>, e.g. m:Hi");
    app->add_option("--revise", revise, "on or off")->check(CLI::IsMember({"on", "off"}));
    app->add_option("--theta", theta, "conflict threshold");
    app->add_flag("--sequential", sequential, "ask for ten candidates and pick one");
    app->add_option("--temperature", temperature);
    app->add_option("--top-p", top_p);
    app->add_option("--reducer", reducer)->check(CLI::IsMember({"sum_mean", "mean_mean"}));
    app->add_flag("--post-removal-stats", post_removal);
    app->add_flag("--full-inconsistency", full_inconsistency);
  }

  experiment::Condition build(const std::string& label) const {
    experiment::Condition c;
    c.label = label;
    c.lambda = lambda;
    c.order = order;
    c.ablate = ablate;
    c.strategy = pruning::strategy_from_string(strategy);
    if (!retain_one.empty()) c.retain_one = experiment::parse_retain_one(retain_one);
    c.revision.enabled = revise == "on";
    c.revision.theta = theta;
    c.sequential = sequential;
    c.temperature = temperature;
    c.top_p = top_p;
    c.reducer = attention::reducer_from_string(reducer);
    c.post_removal_stats = post_removal;
    c.full_prompt_inconsistency = full_inconsistency;
    return c;
  }
};

int run_simulate(const std::string& case_path, const ConditionOpts& co, const BackendOpts& bo, int trials,
                 std::uint64_t seed, int max_turns, const std::string& out) {
  const auto c = corpus::load_case(case_path);
  auto be = open_backends(bo);
  experiment::ExperimentConfig cfg;
  cfg.seed = seed;
  cfg.max_turns = max_turns;
  cfg.trials = std::max(trials, 2);
  auto cond = co.build("simulate");
  const auto ec = experiment::engine_config(cond, cfg);
  std::string all;
  for (int t = 0; t < trials; ++t) {
    const auto s = experiment::trial_seed(cfg, cond, c.id, t);
    auto tr = cond.sequential ? dialogue::run_sequential(c, ec, be.view(), s)
                              : dialogue::run_dialogue(c, ec, be.view(), s);
    tr.condition = cond.label;
    tr.trial = t;
    if (out.empty()) {
      std::cout << "# trial " << t << (tr.failed ? " (failed: " + tr.error + ")" : "") << "\n"
                << dialogue::dialogue_text(tr) << "\n\n";
    } else {
      all += dialogue::to_jsonl(tr);
    }
  }
  if (!out.empty()) report::write_text(out, all);
  return 0;
}

int run_sweep(experiment::ExperimentConfig cfg, const BackendOpts& bo, const std::string& out) {
  auto be = open_backends(bo);
  auto summary = experiment::run_experiment(cfg, be.view(), out);
  for (const auto& r : summary.rows)
    if (r.case_id == "ALL")
      spdlog::info("{:>16}  Sim {:.3f}  Dist-1 {:.3f}  Dist-2 {:.3f}  Dist-3 {:.3f}  removal {:.3f}", r.condition,
                   r.sim, r.dist[0], r.dist[1], r.dist[2], r.word_removal_ratio);
  if (!summary.failures.empty())
    spdlog::warn("{} trial(s) failed; see {}", summary.failures.size(),
                 (summary.run_dir / "failures.json").string());
  std::cout << summary.run_dir.string() << "\n";
  return summary.fully_failed_conditions.empty() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dialogue simulation with attention-guided prompt pruning"};
  app.require_subcommand(1);
  std::string log_level = "info";
  app.add_option("--log-level", log_level)->check(CLI::IsMember({"debug", "info", "warn", "error"}));

  BackendOpts bo;
  ConditionOpts co;

  // simulate
  auto* sim = app.add_subcommand("simulate", "run dialogues on one case");
  std::string case_path, sim_out;
  int sim_trials = 1, max_turns = 16;
  std::uint64_t seed = 2024;
  sim->add_option("--case", case_path, "case file")->required()->check(CLI::ExistingFile);
  sim->add_option("--trials", sim_trials)->check(CLI::PositiveNumber);
  sim->add_option("--seed", seed);
  sim->add_option("--max-turns", max_turns)->check(CLI::PositiveNumber);
  sim->add_option("--out", sim_out, "write transcripts (JSONL) here instead of printing dialogues");
  co.add(sim);
  bo.add(sim);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "run a named or configured experiment");
  std::string exp_name, config_path, corpus_dir = "cases", dataset = "ga", out_root = "runs";
  int trials = 10, jobs = 1;
  std::size_t case_limit = 0;
  std::optional<std::uint64_t> sweep_seed;
  std::optional<int> sweep_turns;
  sweep->add_option("experiment", exp_name, "canned experiment name");
  sweep->add_option("--config", config_path, "experiment config (JSON)")->check(CLI::ExistingFile);
  sweep->add_option("--corpus", corpus_dir)->check(CLI::ExistingDirectory);
  sweep->add_option("--dataset", dataset)->check(CLI::IsMember({"ga", "ha"}));
  sweep->add_option("--trials", trials)->check(CLI::Range(2, 1000));
  sweep->add_option("--seed", sweep_seed);
  sweep->add_option("--max-turns", sweep_turns)->check(CLI::PositiveNumber);
  sweep->add_option("--jobs", jobs)->check(CLI::PositiveNumber);
  sweep->add_option("--cases", case_limit, "use only the first N cases");
  sweep->add_option("--out", out_root, "run root; the experiment directory inside it is replaced");
  bool list = false;
  sweep->add_flag("--list", list, "print the canned experiment names");
  bo.add(sweep);

  // metrics
  auto* met = app.add_subcommand("metrics", "recompute metrics for a run directory");
  std::string run_dir, met_out;
  met->add_option("run_dir", run_dir)->required()->check(CLI::ExistingDirectory);
  met->add_option("--out", met_out, "CSV path (default: stdout)");
  bo.add(met);

  // augment-ha
  auto* aug = app.add_subcommand("augment-ha", "write human-needs siblings (*.json.ha) for a corpus");
  std::string aug_dir = "cases";
  std::uint64_t aug_seed = 2024;
  bool force = false;
  aug->add_option("--corpus", aug_dir)->check(CLI::ExistingDirectory);
  aug->add_option("--seed", aug_seed);
  aug->add_flag("--force", force, "overwrite existing siblings");

  // perturb
  auto* per = app.add_subcommand("perturb", "rename agents or change block lengths of a case");
  std::string per_in, per_out, names;
  std::optional<std::size_t> block_length;
  bool skip_memory = false;
  std::uint64_t per_seed = 2024;
  per->add_option("--case", per_in)->required()->check(CLI::ExistingFile);
  per->add_option("--out", per_out)->required();
  per->add_option("--names", names, "\"Old A=New A,Old B=New B\"");
  per->add_option("--block-length", block_length, "target words per block");
  per->add_flag("--skip-memory", skip_memory, "leave the memory block untouched");
  per->add_option("--seed", per_seed);

  // serve-mock
  auto* srv = app.add_subcommand("serve-mock", "serve the mock backend over the wire protocol");
  std::string host = "127.0.0.1";
  int port = 8765;
  srv->add_option("--host", host);
  srv->add_option("--port", port)->check(CLI::Range(1, 65535));

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*sim) return run_simulate(case_path, co, bo, sim_trials, seed, max_turns, sim_out);

    if (*sweep) {
      if (list) {
        for (const auto& n : experiment::canned_names()) std::cout << n << "\n";
        return 0;
      }
      experiment::ExperimentConfig cfg;
      if (!config_path.empty()) cfg = experiment::load_config(config_path);
      else if (!exp_name.empty()) cfg = experiment::canned(exp_name, corpus_dir);
      else throw Error("sweep needs an experiment name or --config");
      if (config_path.empty() || sweep->count("--corpus")) cfg.corpus_dir = corpus_dir;
      if (sweep->count("--dataset")) cfg.dataset = dataset == "ha" ? corpus::Dataset::kHA : corpus::Dataset::kGA;
      if (sweep->count("--trials")) cfg.trials = trials;
      if (sweep_seed) cfg.seed = *sweep_seed;
      if (sweep_turns) cfg.max_turns = *sweep_turns;
      if (sweep->count("--cases")) cfg.case_limit = case_limit;
      cfg.jobs = jobs;
      return run_sweep(cfg, bo, out_root);
    }

    if (*met) {
      auto be = open_backends(bo);
      auto rows = experiment::metrics_from_run(run_dir, *be.gen);
      std::string csv = report::csv_line(metrics::csv_header());
      for (const auto& r : rows) csv += report::csv_line(metrics::csv_row(r));
      if (met_out.empty()) std::cout << csv;
      else report::write_text(met_out, csv);
      return 0;
    }

    if (*aug) {
      int written = 0;
      for (const auto& e : std::filesystem::directory_iterator(aug_dir)) {
        if (e.path().extension() != ".json") continue;
        const auto sib = corpus::ha_sibling(e.path());
        if (std::filesystem::exists(sib) && !force) continue;
        corpus::save_case(corpus::sample_human_needs(corpus::load_case(e.path()), aug_seed), sib);
        ++written;
      }
      std::cout << written << " case(s) augmented\n";
      return 0;
    }

    if (*per) {
      auto c = corpus::load_case(per_in);
      if (!names.empty()) {
        std::map<std::string, std::string> mapping;
        std::string_view rest(names);
        while (!rest.empty()) {
          const auto comma = rest.find(',');
          const auto item = rest.substr(0, comma);
          const auto eq = item.find('=');
          if (eq == std::string_view::npos) throw Error("--names entries look like Old=New");
          mapping.emplace(std::string(item.substr(0, eq)), std::string(item.substr(eq + 1)));
          rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
        }
        c = corpus::replace_names(c, mapping);
      }
      if (block_length) c = corpus::perturb_block_length(c, *block_length, per_seed, {!skip_memory});
      corpus::save_case(c, per_out);
      return 0;
    }

    if (*srv) {
      backend::MockBackend mock;
      wire::BackendServer server(mock);
      return server.listen(host, port) ? 0 : 1;
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
