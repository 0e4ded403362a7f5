#include "dialdiv/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <spdlog/spdlog.h>

#include "dialdiv/errors.hpp"
#include "dialdiv/report.hpp"
#include "dialdiv/seed.hpp"

namespace dialdiv::experiment {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string lambda_label(double l) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "lambda_%.2f", l);
  return buf;
}

std::string block_name(prompt::BlockId b) { return std::string(1, prompt::letter(b)); }

prompt::BlockId block_of(const std::string& s) {
  if (s.size() == 1)
    if (auto b = prompt::block_from_letter(s[0]); b && prompt::is_ablatable(*b)) return *b;
  throw Error("bad retain-one block: " + s);
}

Condition lam(double l, pruning::Strategy s = pruning::Strategy::kDescending) {
  Condition c;
  c.label = lambda_label(l);
  c.lambda = l;
  c.strategy = s;
  return c;
}

Condition ablation(const std::string& label, const std::string& mask) {
  Condition c;
  c.label = label;
  c.ablate = mask;
  return c;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (conditions.empty()) throw Error("experiment has no conditions");
  if (trials < 2) throw Error("trials must be at least 2");
  if (max_turns < 1) throw Error("max_turns must be positive");
  std::set<std::string> labels;
  for (const auto& c : conditions) {
    if (c.label.empty()) throw Error("condition label is empty");
    if (c.label.find_first_of("/\\") != std::string::npos) throw Error("condition label contains a slash");
    if (!labels.insert(c.label).second) throw Error("duplicate condition label: " + c.label);
    if (!(c.lambda >= 0.0 && c.lambda <= 1.0)) throw InvalidLambda("lambda out of range in " + c.label);
    prompt::PromptLayout::parse(c.order, c.ablate);
  }
  for (const auto& [a, b] : comparisons)
    if (!labels.contains(a) || !labels.contains(b)) throw Error("comparison names unknown condition");
}

json to_json(const Condition& c) {
  json j = {{"label", c.label},
            {"series", c.series},
            {"lambda", c.lambda},
            {"strategy", pruning::to_string(c.strategy)},
            {"order", c.order},
            {"ablate", c.ablate},
            {"sequential", c.sequential},
            {"reducer", attention::to_string(c.reducer)},
            {"post_removal_stats", c.post_removal_stats},
            {"full_prompt_inconsistency", c.full_prompt_inconsistency},
            {"seed_offset", c.seed_offset},
            {"revision",
             {{"enabled", c.revision.enabled},
              {"theta", c.revision.theta},
              {"max_rollbacks", c.revision.max_rollbacks},
              {"backup_count", c.revision.backup_count}}}};
  if (c.retain_one)
    j["retain_one"] = block_name(c.retain_one->block) + (c.retain_one->which == pruning::Which::kHi ? ":Hi" : ":Lo");
  if (c.rename) j["rename"] = {c.rename->first, c.rename->second};
  if (c.block_length) {
    j["block_length"] = *c.block_length;
    j["block_length_memory"] = c.block_length_memory;
  }
  if (c.temperature) j["temperature"] = *c.temperature;
  if (c.top_p) j["top_p"] = *c.top_p;
  return j;
}

dialogue::RetainOne parse_retain_one(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw Error("retain-one spec must look like m:Hi");
  dialogue::RetainOne r;
  r.block = block_of(spec.substr(0, colon));
  const auto which = spec.substr(colon + 1);
  if (which == "Hi") r.which = pruning::Which::kHi;
  else if (which == "Lo") r.which = pruning::Which::kLo;
  else throw Error("retain-one choice must be Hi or Lo");
  return r;
}

Condition condition_from_json(const json& j) {
  Condition c;
  c.label = j.at("label").get<std::string>();
  c.series = j.value("series", "");
  c.lambda = j.value("lambda", 0.0);
  c.strategy = pruning::strategy_from_string(j.value("strategy", "desc"));
  c.order = j.value("order", "bpmec");
  c.ablate = j.value("ablate", "");
  c.sequential = j.value("sequential", false);
  c.reducer = attention::reducer_from_string(j.value("reducer", "sum_mean"));
  c.post_removal_stats = j.value("post_removal_stats", false);
  c.full_prompt_inconsistency = j.value("full_prompt_inconsistency", false);
  c.seed_offset = j.value("seed_offset", std::uint64_t{0});
  if (j.contains("revision")) {
    const auto& r = j["revision"];
    c.revision.enabled = r.value("enabled", false);
    c.revision.theta = r.value("theta", 6.67);
    c.revision.max_rollbacks = r.value("max_rollbacks", 3);
    c.revision.backup_count = r.value("backup_count", 3);
  }
  if (j.contains("retain_one")) c.retain_one = parse_retain_one(j["retain_one"].get<std::string>());
  if (j.contains("rename")) {
    auto names = j["rename"].get<std::vector<std::string>>();
    if (names.size() != 2) throw SchemaError("rename", "needs two names");
    c.rename = std::make_pair(names[0], names[1]);
  }
  if (j.contains("block_length")) {
    c.block_length = j["block_length"].get<std::size_t>();
    c.block_length_memory = j.value("block_length_memory", true);
  }
  if (j.contains("temperature")) c.temperature = j["temperature"].get<double>();
  if (j.contains("top_p")) c.top_p = j["top_p"].get<double>();
  return c;
}

json to_json(const ExperimentConfig& c) {
  json conds = json::array();
  for (const auto& x : c.conditions) conds.push_back(to_json(x));
  json comps = json::array();
  for (const auto& [a, b] : c.comparisons) comps.push_back({a, b});
  return {{"name", c.name},
          {"corpus_dir", c.corpus_dir.string()},
          {"dataset", c.dataset == corpus::Dataset::kGA ? "ga" : "ha"},
          {"trials", c.trials},
          {"seed", c.seed},
          {"max_turns", c.max_turns},
          {"case_limit", c.case_limit},
          {"per_utterance", c.per_utterance},
          {"lambda_plots", c.lambda_plots},
          {"comparisons", std::move(comps)},
          {"conditions", std::move(conds)}};
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig c;
  c.name = j.value("name", "custom");
  c.corpus_dir = j.value("corpus_dir", "cases");
  c.dataset = j.value("dataset", "ga") == "ha" ? corpus::Dataset::kHA : corpus::Dataset::kGA;
  c.trials = j.value("trials", 10);
  c.seed = j.value("seed", std::uint64_t{2024});
  c.max_turns = j.value("max_turns", 16);
  c.jobs = j.value("jobs", 1);
  c.case_limit = j.value("case_limit", std::size_t{0});
  c.per_utterance = j.value("per_utterance", false);
  c.lambda_plots = j.value("lambda_plots", false);
  if (j.contains("comparisons"))
    for (const auto& p : j["comparisons"]) c.comparisons.emplace_back(p.at(0).get<std::string>(), p.at(1).get<std::string>());
  for (const auto& x : j.at("conditions")) c.conditions.push_back(condition_from_json(x));
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot read " + path.string());
  auto j = json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ParseError("config is not valid JSON: " + path.string());
  return config_from_json(j);
}

const std::vector<double>& lambda_grid() {
  static const std::vector<double> grid = {0.0, 0.15, 0.3, 0.5, 0.7, 0.85, 1.0};
  return grid;
}

std::vector<std::string> canned_names() {
  return {"lambda_sweep",    "lambda_sweep_asc",    "block_ablations", "retain_one_grid",
          "post_removal_stats", "revision_onoff",   "decoding_comparison", "sequential_baseline",
          "block_order",     "name_frequency",      "block_length",    "reducer_comparison",
          "exclusiveness",   "per_utterance"};
}

ExperimentConfig canned(const std::string& name, const std::filesystem::path& corpus_dir) {
  ExperimentConfig cfg;
  cfg.name = name;
  cfg.corpus_dir = corpus_dir;
  auto& cs = cfg.conditions;
  if (name == "lambda_sweep" || name == "lambda_sweep_asc") {
    const auto s = name == "lambda_sweep" ? pruning::Strategy::kDescending : pruning::Strategy::kAscending;
    for (double l : lambda_grid()) cs.push_back(lam(l, s));
    cfg.lambda_plots = true;
  } else if (name == "block_ablations") {
    cs = {ablation("Full", ""), ablation("RMb", "b"), ablation("RMm", "m"), ablation("RMp", "p"),
          ablation("RMe", "e"), ablation("RMbmpe", "bmpe")};
  } else if (name == "retain_one_grid") {
    cs.push_back(ablation("Full", ""));
    for (char b : std::string("bmpe"))
      for (auto w : {pruning::Which::kHi, pruning::Which::kLo}) {
        Condition c;
        c.label = std::string(1, b) + "1" + (w == pruning::Which::kHi ? "Hi" : "Lo");
        c.retain_one = dialogue::RetainOne{*prompt::block_from_letter(b), w};
        cs.push_back(c);
      }
    cs.push_back(ablation("RMbmpe", "bmpe"));
  } else if (name == "post_removal_stats") {
    for (double l : lambda_grid()) {
      if (l == 0.0) continue;
      auto c = lam(l);
      c.post_removal_stats = true;
      cs.push_back(c);
    }
    cfg.lambda_plots = true;
  } else if (name == "revision_onoff") {
    for (double l : lambda_grid()) {
      auto off = lam(l);
      off.label += "_off";
      off.series = "revision_off";
      off.full_prompt_inconsistency = l == 0.0;
      cs.push_back(off);
      if (l == 0.0) continue;
      auto on = lam(l);
      on.label += "_on";
      on.series = "revision_on";
      on.revision.enabled = true;
      cs.push_back(on);
    }
    cfg.lambda_plots = true;
  } else if (name == "decoding_comparison") {
    cs.push_back(ablation("Full", ""));
    auto t = ablation("T=1.0", "");
    t.temperature = 1.0;
    cs.push_back(t);
    auto p = ablation("p=0.99", "");
    p.top_p = 0.99;
    cs.push_back(p);
  } else if (name == "sequential_baseline") {
    cs.push_back(ablation("Full", ""));
    auto s = ablation("Sequential", "");
    s.sequential = true;
    cs.push_back(s);
  } else if (name == "block_order") {
    for (const char* o : {"bpmec", "bmepc", "bmecp", "cepmb", "cempb"}) {
      Condition c;
      c.label = o;
      c.order = o;
      cs.push_back(c);
    }
  } else if (name == "name_frequency") {
    const std::pair<std::string, std::pair<std::string, std::string>> pairs[] = {
        {"HPSS", {"Harry Potter", "Severus Snape"}}, {"TLCS", {"Tifa Lockhart", "Cloud Strife"}}};
    cs.push_back(ablation("Full", ""));
    cs.push_back(ablation("RMbmp", "bmp"));
    for (const auto& [tag, names] : pairs) {
      auto full = ablation(tag, "");
      full.rename = names;
      cs.push_back(full);
      auto rm = ablation(tag + "+RMbmp", "bmp");
      rm.rename = names;
      cs.push_back(rm);
    }
  } else if (name == "block_length") {
    cs.push_back(ablation("RMm", "m"));
    for (std::size_t n : {250u, 750u}) {
      auto c = ablation("BLN" + std::to_string(n) + "+RMm", "m");
      c.block_length = n;
      c.block_length_memory = false;
      cs.push_back(c);
    }
  } else if (name == "reducer_comparison") {
    for (double l : {0.3, 0.5, 0.7})
      for (auto r : {attention::Reducer::kSumMean, attention::Reducer::kMeanMean}) {
        auto c = lam(l);
        c.reducer = r;
        c.label = std::string(attention::to_string(r)) + "_" + c.label;
        c.series = std::string(attention::to_string(r));
        cs.push_back(c);
      }
    cfg.lambda_plots = true;
  } else if (name == "exclusiveness") {
    for (std::uint64_t s = 0; s < 4; ++s) {
      auto c = ablation("Full_s" + std::to_string(s), "");
      c.seed_offset = s;
      cs.push_back(c);
    }
    cs.push_back(ablation("RMm", "m"));
    for (int s = 1; s < 4; ++s) cfg.comparisons.emplace_back("Full_s0", "Full_s" + std::to_string(s));
    cfg.comparisons.emplace_back("Full_s0", "RMm");
  } else if (name == "per_utterance") {
    cs.push_back(ablation("Full", ""));
    cs.push_back(lam(0.5));
    cs.push_back(ablation("RMbmpe", "bmpe"));
    cfg.per_utterance = true;
  } else {
    throw Error("unknown experiment: " + name);
  }
  for (auto& c : cs)
    if (c.series.empty()) c.series = name;
  return cfg;
}

corpus::Case prepare_case(const corpus::Case& c, const Condition& cond, std::uint64_t seed) {
  corpus::Case out = c;
  if (cond.rename)
    out = corpus::replace_names(out, {{c.agent_a.name, cond.rename->first}, {c.agent_b.name, cond.rename->second}});
  if (cond.block_length)
    out = corpus::perturb_block_length(out, *cond.block_length, mix_seed({seed, fnv1a(c.id), *cond.block_length}),
                                       corpus::PerturbOptions{cond.block_length_memory});
  return out;
}

dialogue::EngineConfig engine_config(const Condition& cond, const ExperimentConfig& cfg) {
  dialogue::EngineConfig e;
  e.lambda = cond.lambda;
  e.strategy = cond.strategy;
  e.layout = prompt::PromptLayout::parse(cond.order, cond.ablate);
  if (cond.temperature) e.decoding.temperature = *cond.temperature;
  if (cond.top_p) e.decoding.top_p = *cond.top_p;
  e.reducer = cond.reducer;
  e.max_turns = cfg.max_turns;
  e.revision = cond.revision;
  e.retain_one = cond.retain_one;
  e.sequential = cond.sequential;
  e.full_prompt_inconsistency = cond.full_prompt_inconsistency;
  e.post_removal_stats = cond.post_removal_stats;
  return e;
}

std::uint64_t trial_seed(const ExperimentConfig& cfg, const Condition& cond, const std::string& case_id,
                         int trial) {
  return mix_seed({cfg.seed, fnv1a(case_id), static_cast<std::uint64_t>(trial), cond.seed_offset});
}

std::filesystem::path transcript_path(const std::filesystem::path& run_dir, const std::string& condition,
                                      const std::string& case_id, int trial) {
  return run_dir / condition / case_id / (std::to_string(trial) + ".jsonl");
}

namespace {

struct Cell {
  std::size_t cond;
  std::size_t case_index;
  int trial;
};

std::vector<metrics::MetricsReport> condition_rows(
    const std::string& experiment, const std::string& label,
    const std::vector<std::vector<dialogue::Transcript>>& by_case, backend::GenerationBackend& embedder) {
  std::vector<metrics::MetricsReport> rows;
  for (const auto& trials : by_case) {
    if (trials.empty()) continue;
    try {
      auto r = metrics::report(trials, embedder);
      r.experiment = experiment;
      r.condition = label;
      rows.push_back(r);
    } catch (const TooShort& e) {
      spdlog::warn("{}/{}: {}", label, trials.front().case_id, e.what());
    }
  }
  if (!rows.empty()) rows.push_back(metrics::aggregate(rows));
  return rows;
}

std::string num(double x) {
  if (std::isnan(x)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

void write_plots(const ExperimentConfig& cfg, const std::vector<metrics::MetricsReport>& rows,
                 const std::filesystem::path& dir) {
  std::map<std::string, const Condition*> by_label;
  for (const auto& c : cfg.conditions) by_label[c.label] = &c;
  struct Metric {
    const char* key;
    const char* title;
    double (*get)(const metrics::MetricsReport&);
  };
  const Metric ms[] = {
      {"dist3", "Dist-3", [](const metrics::MetricsReport& r) { return r.dist[2]; }},
      {"dist2", "Dist-2", [](const metrics::MetricsReport& r) { return r.dist[1]; }},
      {"dist1", "Dist-1", [](const metrics::MetricsReport& r) { return r.dist[0]; }},
      {"sim", "Sim", [](const metrics::MetricsReport& r) { return r.sim; }},
      {"removal_ratio", "Word removal ratio", [](const metrics::MetricsReport& r) { return r.word_removal_ratio; }},
      {"removed_inconsistency", "Inconsistency (removed units)",
       [](const metrics::MetricsReport& r) { return r.removed_inconsistency; }},
      {"retention", "Attention retention (%)", [](const metrics::MetricsReport& r) { return r.retention_percent; }},
  };
  for (const auto& m : ms) {
    std::map<std::string, report::Series> by_lambda, by_ratio;
    bool any = false;
    for (const auto& r : rows) {
      if (r.case_id != "ALL") continue;
      const auto* c = by_label.at(r.condition);
      const double y = m.get(r);
      any = any || !std::isnan(y);
      auto& sl = by_lambda[c->series];
      sl.label = c->series;
      sl.points.emplace_back(c->lambda, y);
      auto& sr = by_ratio[c->series];
      sr.label = c->series;
      sr.points.emplace_back(r.word_removal_ratio, y);
    }
    if (!any) continue;
    std::vector<report::Series> a, b;
    for (auto& [_, s] : by_lambda) {
      std::sort(s.points.begin(), s.points.end());
      a.push_back(s);
    }
    for (auto& [_, s] : by_ratio) {
      std::sort(s.points.begin(), s.points.end());
      b.push_back(s);
    }
    report::write_text(dir / ("lambda_vs_" + std::string(m.key) + ".svg"),
                       report::svg_line_plot(cfg.name + ": " + m.title + " vs lambda", "lambda", m.title, a));
    if (std::string(m.key) != "removal_ratio")
      report::write_text(dir / ("removal_ratio_vs_" + std::string(m.key) + ".svg"),
                         report::svg_line_plot(cfg.name + ": " + m.title + " vs word removal ratio",
                                               "word removal ratio", m.title, b));
  }
}

}  // namespace

RunSummary run_experiment(const ExperimentConfig& cfg, const dialogue::Backends& backends,
                          const std::filesystem::path& out_root) {
  cfg.validate();
  if (!backends.generator) throw Error("no generation backend");
  auto cases = corpus::load_corpus(cfg.corpus_dir, cfg.dataset);
  if (cfg.case_limit && cases.size() > cfg.case_limit) cases.resize(cfg.case_limit);
  if (cases.empty()) throw Error("corpus is empty: " + cfg.corpus_dir.string());

  RunSummary summary;
  summary.run_dir = out_root / cfg.name;
  std::filesystem::remove_all(summary.run_dir);
  std::filesystem::create_directories(summary.run_dir);
  report::write_text(summary.run_dir / "config.json", to_json(cfg).dump(2) + "\n");

  const std::size_t nc = cfg.conditions.size();
  std::vector<std::vector<corpus::Case>> prepared(nc);
  for (std::size_t k = 0; k < nc; ++k)
    for (const auto& c : cases) prepared[k].push_back(prepare_case(c, cfg.conditions[k], cfg.seed));

  std::vector<Cell> cells;
  for (std::size_t k = 0; k < nc; ++k)
    for (std::size_t i = 0; i < cases.size(); ++i)
      for (int t = 0; t < cfg.trials; ++t) cells.push_back({k, i, t});

  std::vector<dialogue::Transcript> results(cells.size());
  const int jobs = std::max(1, cfg.jobs);
  spdlog::info("{}: {} dialogues on {} thread(s)", cfg.name, cells.size(), jobs);

#pragma omp parallel for schedule(dynamic) num_threads(jobs)
  for (std::size_t x = 0; x < cells.size(); ++x) {
    const auto& cell = cells[x];
    const auto& cond = cfg.conditions[cell.cond];
    const auto& c = prepared[cell.cond][cell.case_index];
    dialogue::Transcript tr;
    try {
      const auto ec = engine_config(cond, cfg);
      const auto seed = trial_seed(cfg, cond, cases[cell.case_index].id, cell.trial);
      tr = cond.sequential ? dialogue::run_sequential(c, ec, backends, seed)
                           : dialogue::run_dialogue(c, ec, backends, seed);
    } catch (const std::exception& e) {
      tr.case_id = c.id;
      tr.speaker_a = c.agent_a.name;
      tr.speaker_b = c.agent_b.name;
      tr.failed = true;
      tr.error = e.what();
    }
    tr.condition = cond.label;
    tr.trial = cell.trial;
    dialogue::write_transcript(tr, transcript_path(summary.run_dir, cond.label, c.id, cell.trial));
    results[x] = std::move(tr);
  }

  // metrics, single-threaded over the collected transcripts
  std::vector<std::vector<std::vector<dialogue::Transcript>>> grouped(
      nc, std::vector<std::vector<dialogue::Transcript>>(cases.size()));
  for (std::size_t x = 0; x < cells.size(); ++x) {
    auto& tr = results[x];
    if (tr.failed)
      summary.failures.push_back({tr.condition, tr.case_id, tr.trial, tr.error});
    grouped[cells[x].cond][cells[x].case_index].push_back(std::move(tr));
  }
  auto& embedder = *backends.generator;
  for (std::size_t k = 0; k < nc; ++k) {
    const auto& label = cfg.conditions[k].label;
    auto rows = condition_rows(cfg.name, label, grouped[k], embedder);
    if (rows.empty()) summary.fully_failed_conditions.push_back(label);
    summary.rows.insert(summary.rows.end(), rows.begin(), rows.end());
  }
  std::vector<std::vector<std::string>> csv;
  for (const auto& r : summary.rows) csv.push_back(metrics::csv_row(r));
  report::write_csv(summary.run_dir / "metrics.csv", metrics::csv_header(), csv);

  if (cfg.per_utterance) {
    std::vector<std::vector<std::string>> out;
    for (std::size_t k = 0; k < nc; ++k) {
      std::map<std::size_t, std::pair<std::vector<double>, std::vector<double>>> pooled;
      for (std::size_t i = 0; i < cases.size(); ++i) {
        std::vector<dialogue::Transcript> ok;
        for (const auto& t : grouped[k][i])
          if (!t.failed) ok.push_back(t);
        for (const auto& p : metrics::per_utterance_diversity(ok, embedder)) {
          out.push_back({cfg.name, cfg.conditions[k].label, cases[i].id, std::to_string(p.index),
                         std::to_string(p.contributors), num(p.dist3), num(p.sim)});
          pooled[p.index].first.push_back(p.dist3);
          pooled[p.index].second.push_back(p.sim);
        }
      }
      std::vector<report::Series> series(2);
      series[0].label = "Dist-3";
      series[1].label = "Sim";
      for (const auto& [idx, v] : pooled) {
        auto mean = [](const std::vector<double>& xs) {
          double s = 0.0;
          std::size_t n = 0;
          for (double x : xs)
            if (!std::isnan(x)) s += x, ++n;
          return n ? s / static_cast<double>(n) : kNaN;
        };
        const double d = mean(v.first), s = mean(v.second);
        out.push_back({cfg.name, cfg.conditions[k].label, "ALL", std::to_string(idx),
                       std::to_string(v.first.size()), num(d), num(s)});
        series[0].points.emplace_back(static_cast<double>(idx), d);
        series[1].points.emplace_back(static_cast<double>(idx), s);
      }
      report::write_text(summary.run_dir / ("per_utterance_" + cfg.conditions[k].label + ".svg"),
                         report::svg_line_plot(cfg.conditions[k].label + ": diversity by utterance index",
                                               "utterance index", "value", series));
    }
    report::write_csv(summary.run_dir / "per_utterance.csv",
                      {"experiment", "condition", "case_id", "index", "contributors", "dist3", "sim"}, out);
  }

  if (!cfg.comparisons.empty()) {
    std::map<std::string, std::size_t> idx;
    for (std::size_t k = 0; k < nc; ++k) idx[cfg.conditions[k].label] = k;
    std::vector<std::vector<std::string>> out;
    for (const auto& [a, b] : cfg.comparisons) {
      std::vector<metrics::Exclusiveness> per;
      for (std::size_t i = 0; i < cases.size(); ++i) {
        std::vector<metrics::DialogueSample> sa, sb;
        for (const auto& t : grouped[idx[a]][i])
          if (!t.failed && !t.turns.empty()) sa.push_back(metrics::sample_of(t));
        for (const auto& t : grouped[idx[b]][i])
          if (!t.failed && !t.turns.empty()) sb.push_back(metrics::sample_of(t));
        if (sa.empty() || sb.empty()) continue;
        auto e = metrics::exclusiveness(sa, sb, embedder);
        per.push_back(e);
        out.push_back({cfg.name, a, b, cases[i].id, num(e.avg_max_sim), num(e.excl[0]), num(e.excl[1]),
                       num(e.excl[2])});
      }
      if (per.empty()) continue;
      metrics::Exclusiveness m;
      for (const auto& e : per) {
        m.avg_max_sim += e.avg_max_sim;
        for (int n = 0; n < 3; ++n) m.excl[n] += e.excl[n];
      }
      const double d = static_cast<double>(per.size());
      out.push_back({cfg.name, a, b, "ALL", num(m.avg_max_sim / d), num(m.excl[0] / d), num(m.excl[1] / d),
                     num(m.excl[2] / d)});
    }
    report::write_csv(summary.run_dir / "exclusiveness.csv",
                      {"experiment", "set_a", "set_b", "case_id", "avg_max_sim", "excl1", "excl2", "excl3"}, out);
  }

  if (cfg.lambda_plots) write_plots(cfg, summary.rows, summary.run_dir);

  json fails = json::array();
  for (const auto& f : summary.failures)
    fails.push_back({{"condition", f.condition}, {"case_id", f.case_id}, {"trial", f.trial}, {"error", f.error}});
  report::write_text(summary.run_dir / "failures.json",
                     json{{"failed_trials", std::move(fails)},
                          {"fully_failed_conditions", summary.fully_failed_conditions}}
                             .dump(2) +
                         "\n");
  return summary;
}

std::vector<metrics::MetricsReport> metrics_from_run(const std::filesystem::path& run_dir,
                                                     backend::GenerationBackend& embedder) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(run_dir)) throw Error("not a run directory: " + run_dir.string());
  std::string experiment = run_dir.filename().string();
  std::vector<std::string> order;
  if (fs::exists(run_dir / "config.json")) {
    auto cfg = load_config(run_dir / "config.json");
    experiment = cfg.name;
    for (const auto& c : cfg.conditions) order.push_back(c.label);
  } else {
    for (const auto& e : fs::directory_iterator(run_dir))
      if (e.is_directory()) order.push_back(e.path().filename().string());
    std::sort(order.begin(), order.end());
  }
  std::vector<metrics::MetricsReport> rows;
  for (const auto& label : order) {
    const auto cdir = run_dir / label;
    if (!fs::is_directory(cdir)) continue;
    std::vector<fs::path> case_dirs;
    for (const auto& e : fs::directory_iterator(cdir))
      if (e.is_directory()) case_dirs.push_back(e.path());
    std::sort(case_dirs.begin(), case_dirs.end());
    std::vector<std::vector<dialogue::Transcript>> by_case;
    for (const auto& d : case_dirs) {
      std::vector<dialogue::Transcript> ts;
      for (const auto& e : fs::directory_iterator(d))
        if (e.path().extension() == ".jsonl") ts.push_back(dialogue::read_transcript(e.path()));
      std::sort(ts.begin(), ts.end(), [](const auto& a, const auto& b) { return a.trial < b.trial; });
      by_case.push_back(std::move(ts));
    }
    auto r = condition_rows(experiment, label, by_case, embedder);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  return rows;
}

}  // namespace dialdiv::experiment
