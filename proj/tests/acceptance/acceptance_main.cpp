// Acceptance gate: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "dialdiv/attention.hpp"
#include "dialdiv/corpus.hpp"
#include "dialdiv/experiment.hpp"
#include "dialdiv/metrics.hpp"
#include "dialdiv/pruning.hpp"
#include "dialdiv/revision.hpp"
#include "fixtures.hpp"

namespace fs = std::filesystem;
using namespace dialdiv;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void line(bool ok, const std::string& name, const std::string& detail) {
  std::printf("%s  %-28s %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

void guarded(const std::string& name, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    line(false, name, std::string("exception: ") + e.what());
  }
}

std::vector<attention::UnitScore> scores_of(const std::vector<double>& a) {
  std::vector<attention::UnitScore> out;
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back({"u" + std::to_string(i), a[i], {a[i]}, {}});
  return out;
}

// Brute-force removal scan in exact integers: unit i scores k[i]/16 and
// lambda = j/20. Pick the best remaining unit each step (earliest on ties),
// add it if it fits, stop once the target is reached.
std::set<std::string> removal_oracle(const std::vector<long>& k, long j) {
  long total = 0;
  for (long x : k) total += x;
  std::set<std::string> out;
  if (j == 0) return out;
  std::vector<bool> used(k.size(), false);
  long cur = 0;
  for (std::size_t step = 0; step < k.size(); ++step) {
    std::size_t pick = k.size();
    for (std::size_t i = 0; i < k.size(); ++i)
      if (!used[i] && (pick == k.size() || k[i] > k[pick])) pick = i;
    used[pick] = true;
    if (j == 20 || 20 * (cur + k[pick]) <= j * total) {
      cur += k[pick];
      out.insert("u" + std::to_string(pick));
    }
    if (j != 20 && 20 * cur >= j * total) break;
  }
  return out;
}

void check_removal_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(20240611);
  int mismatches = 0, edge_failures = 0;
  for (int it = 0; it < 1000; ++it) {
    const std::size_t n = 1 + rng() % 50;
    std::vector<long> k(n);
    std::vector<double> a(n);
    for (std::size_t i = 0; i < n; ++i) {
      k[i] = static_cast<long>(rng() % 65);
      a[i] = static_cast<double>(k[i]) / 16.0;
    }
    const auto s = scores_of(a);
    const long j = static_cast<long>(rng() % 21);
    const auto got = pruning::select_removal(s, static_cast<double>(j) * 0.05, pruning::Strategy::kDescending);
    if (std::set<std::string>(got.removed_unit_ids.begin(), got.removed_unit_ids.end()) != removal_oracle(k, j))
      ++mismatches;
    if (!pruning::select_removal(s, 0.0, pruning::Strategy::kDescending).removed_unit_ids.empty())
      ++edge_failures;
    if (pruning::select_removal(s, 1.0, pruning::Strategy::kDescending).removed_unit_ids.size() != n)
      ++edge_failures;
  }
  const double secs = seconds_since(t0);
  char buf[160];
  std::snprintf(buf, sizeof buf, "1000 instances, %d mismatches, %d edge failures, %.2fs", mismatches,
                edge_failures, secs);
  line(mismatches == 0 && edge_failures == 0 && secs < 10.0, "removal-oracle", buf);
}

void check_skip_then_fill() {
  const auto p = pruning::select_removal(scores_of({5, 3}), 0.4, pruning::Strategy::kDescending);
  const bool ok = p.removed_unit_ids == std::vector<std::string>{"u1"};
  line(ok, "skip-then-fill", ok ? "{5,3} lambda=0.4 removes the score-3 unit" : "wrong selection");
}

void check_reducers() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> d(0.0, 0.3);
  double worst = 0.0;
  for (int it = 0; it < 500; ++it) {
    AttentionTensor t(1 + rng() % 6, 1 + rng() % 6, 1 + rng() % 12, 1 + rng() % 12);
    for (auto& v : t.values) v = d(rng);
    for (auto r : {attention::Reducer::kSumMean, attention::Reducer::kMeanMean}) {
      double total = 0.0;
      for (std::size_t l = 0; l < t.layers; ++l) {
        double heads = 0.0;
        for (std::size_t h = 0; h < t.heads; ++h) {
          double s = 0.0;
          for (std::size_t i = 0; i < t.unit_tokens; ++i)
            for (std::size_t j = 0; j < t.response_tokens; ++j) s += t.at(l, h, i, j);
          s /= static_cast<double>(t.response_tokens);
          if (r == attention::Reducer::kMeanMean) s /= static_cast<double>(t.unit_tokens);
          heads += s;
        }
        total += heads / static_cast<double>(t.heads);
      }
      const double got = attention::unit_score(t, r);
      if (total > 0) worst = std::max(worst, std::abs(got - total) / total);
    }
  }
  AttentionTensor u(1, 1, 2, 3, 0.1);
  const double sm = attention::unit_score(u, attention::Reducer::kSumMean);
  const double mm = attention::unit_score(u, attention::Reducer::kMeanMean);
  const bool closed = sm == 0.2 && mm == 0.1;
  char buf[160];
  std::snprintf(buf, sizeof buf, "500 tensors, max rel err %.2e; sum_mean %.17g, mean_mean %.17g", worst, sm, mm);
  line(worst <= 1e-9 && closed, "reducer-oracle", buf);
}

void check_dist() {
  std::mt19937_64 rng(99);
  static const char* vocab[] = {"a", "b", "c", "d", "e", "f", "g", "h", "i", "j"};
  int mismatches = 0;
  for (int it = 0; it < 500; ++it) {
    std::vector<std::vector<std::string>> corpus(2 + rng() % 6);
    for (auto& dlg : corpus) {
      const std::size_t utts = 1 + rng() % 5;
      for (std::size_t k = 0; k < utts; ++k) {
        std::string s;
        const std::size_t len = 3 + rng() % 10;
        for (std::size_t w = 0; w < len; ++w) s += std::string(w ? " " : "") + vocab[rng() % 10];
        dlg.push_back(s);
      }
    }
    for (int n = 1; n <= 3; ++n) {
      std::set<std::vector<std::string>> uniq;
      std::size_t total = 0;
      for (const auto& dlg : corpus)
        for (const auto& u : dlg) {
          std::istringstream in(u);
          std::vector<std::string> w{std::istream_iterator<std::string>(in), {}};
          for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= w.size(); ++i) {
            uniq.insert({w.begin() + static_cast<std::ptrdiff_t>(i), w.begin() + static_cast<std::ptrdiff_t>(i) + n});
            ++total;
          }
        }
      const double want = static_cast<double>(uniq.size()) / static_cast<double>(total);
      if (metrics::dist_n(corpus, n) != want) ++mismatches;
    }
  }
  const std::vector<std::vector<std::string>> pair = {{"hello there friend"}, {"hello there friend"}};
  const bool hand = metrics::dist_n(pair, 1) == 0.5 && metrics::dist_n(pair, 2) == 0.5;
  line(mismatches == 0 && hand, "dist-n-oracle",
       std::to_string(mismatches) + " mismatches over 500 corpora; hello-there-friend pair " +
           (hand ? "0.5/0.5" : "wrong"));
}

void check_sim() {
  backend::MockBackend be;
  double worst = 0.0;
  for (std::size_t k = 2; k <= 10; ++k)
    worst = std::max(worst, std::abs(metrics::sim(std::vector<std::string>(k, "A: same words here\nB: ok"), be) - 1.0));
  const double g01 = 0.9, g02 = 0.8, g12 = 0.7;
  const double y1 = std::sqrt(1 - g01 * g01);
  const double y2 = (g12 - g01 * g02) / y1;
  be.set_embedding("v0", {1, 0, 0});
  be.set_embedding("v1", {g01, y1, 0});
  be.set_embedding("v2", {g02, y2, std::sqrt(1 - g02 * g02 - y2 * y2)});
  const double s = metrics::sim({"v0", "v1", "v2"}, be);
  char buf[160];
  std::snprintf(buf, sizeof buf, "identical max |sim-1| %.2e; scripted cosines -> %.15f", worst, s);
  line(worst <= 1e-6 && std::abs(s - 0.8) <= 1e-12, "sim-properties", buf);
}

void check_exclusiveness() {
  backend::MockBackend be;
  auto cases = corpus::load_corpus(fixtures::corpus_dir());
  std::vector<metrics::DialogueSample> a;
  for (const auto& c : cases) {
    metrics::DialogueSample s;
    s.utterances = c.agent_a.memory_items;
    for (const auto& u : s.utterances) s.text += u + "\n";
    a.push_back(s);
  }
  const auto e = metrics::exclusiveness(a, a, be);
  const bool ok = std::abs(e.avg_max_sim - 1.0) <= 1e-6 && e.excl[0] == 0 && e.excl[1] == 0 && e.excl[2] == 0;
  char buf[160];
  std::snprintf(buf, sizeof buf, "(%.9f, %g, %g, %g) over %zu dialogues", e.avg_max_sim, e.excl[0], e.excl[1],
                e.excl[2], a.size());
  line(ok, "exclusiveness-identity", buf);
}

void check_revision() {
  auto judged = [](const std::vector<double>& means, std::vector<std::size_t>& calls) {
    backend::MockBackend be;
    be.set_recording(true);
    std::vector<std::string> cands;
    for (std::size_t i = 0; i < means.size(); ++i) {
      cands.push_back("candidate " + std::to_string(i));
      char out[64];
      std::snprintf(out, sizeof out, "Comment: scripted\nScore: %g", means[i]);
      be.add_rule({"going to say '" + cands.back() + "'", {out}, {}});
    }
    revision::JudgeSetup js{&be, "Ann", "Bo", {}, 3};
    revision::RevisionConfig rc;
    rc.enabled = true;
    auto out = revision::revise(cands, {"Ann never drinks coffee."}, js, rc, 11);
    calls.clear();
    for (const auto& c : cands) calls.push_back(be.calls_matching("going to say '" + c + "'"));
    return out;
  };
  std::vector<std::size_t> calls;
  auto a = judged({8.0, 7.5, 7.0, 6.0}, calls);
  const bool walk = a.rollbacks == 3 && a.chosen_index == 3 && a.events.size() == 4 && a.events[3].accepted &&
                    calls == std::vector<std::size_t>{3, 3, 3, 3};
  auto b = judged({9.0, 8.0, 8.5, 7.5}, calls);
  const bool fallback = b.chosen_index == 3 && b.events.size() == 4 && calls == std::vector<std::size_t>{3, 3, 3, 3};
  line(walk && fallback, "revision-choreography",
       std::string("means [8,7.5,7,6]: ") + std::to_string(a.rollbacks) + " rollbacks, chose " +
           std::to_string(a.chosen_index) + "; all failing chose " + std::to_string(b.chosen_index) +
           "; 3 judge calls per round");
}

std::vector<fs::path> files_under(const fs::path& root) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root));
  std::sort(out.begin(), out.end());
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void check_determinism(const fs::path& work) {
  const auto cfg = experiment::canned("lambda_sweep", fixtures::corpus_dir());
  double slowest = 0.0;
  for (const char* run : {"run1", "run2"}) {
    backend::MockBackend be;
    const auto t0 = Clock::now();
    experiment::run_experiment(cfg, {&be, nullptr}, work / run);
    slowest = std::max(slowest, seconds_since(t0));
  }
  const auto d1 = work / "run1" / cfg.name;
  const auto d2 = work / "run2" / cfg.name;
  const auto f1 = files_under(d1);
  const auto f2 = files_under(d2);
  std::size_t transcripts = 0, csvs = 0, differing = 0;
  for (const auto& f : f1) {
    if (f.extension() == ".jsonl") ++transcripts;
    if (f.extension() == ".csv") ++csvs;
    if (slurp(d1 / f) != slurp(d2 / f)) ++differing;
  }
  char buf[200];
  std::snprintf(buf, sizeof buf, "%zu transcripts + %zu CSVs, %zu differ; slowest run %.1fs", transcripts, csvs,
                differing, slowest);
  line(f1 == f2 && differing == 0 && transcripts > 0 && csvs > 0 && slowest < 300.0, "end-to-end-determinism", buf);
}

// Reads the lambda=1 transcripts of the first determinism run.
void check_lambda_one(const fs::path& work) {
  const auto cfg = experiment::canned("lambda_sweep", fixtures::corpus_dir());
  const auto d1 = work / "run1" / cfg.name;
  const experiment::Condition* one = nullptr;
  for (const auto& c : cfg.conditions)
    if (c.lambda == 1.0) one = &c;
  if (!one) {
    line(false, "lambda-one-structure", "no lambda=1 condition");
    return;
  }
  const auto ablate = prompt::PromptLayout::parse("bpmec", "bmpe");
  std::size_t turns = 0, bad = 0;
  for (const auto& c : corpus::load_corpus(fixtures::corpus_dir()))
    for (int t = 0; t < cfg.trials; ++t) {
      const auto tr = dialogue::read_transcript(experiment::transcript_path(d1, one->label, c.id, t));
      if (tr.failed) ++bad;
      std::vector<prompt::DialogueLine> lines;
      for (const auto& turn : tr.turns) {
        const auto ref = prompt::assemble(c, lines, turn.speaker, ablate);
        ++turns;
        if (turn.prompt_unit_ids != ref.unit_ids() || turn.prompt_blocks != ref.block_sequence()) ++bad;
        lines.push_back({turn.speaker_name, turn.utterance});
      }
    }
  line(bad == 0 && turns > 0, "lambda-one-structure",
       std::to_string(turns) + " turns checked, " + std::to_string(bad) + " mismatches");
}

void check_ha_marginals() {
  constexpr int kDraws = 10000;
  std::map<corpus::Need, int> unsat;
  std::map<corpus::Emotion, int> emo;
  std::map<corpus::Closeness, int> close;
  for (int i = 0; i < kDraws; ++i) {
    const auto h = corpus::draw_human_needs("ga-marginals", static_cast<std::uint64_t>(i), corpus::AgentId::kA);
    for (const auto& u : h.unsatisfied_needs) ++unsat[u.need];
    ++emo[h.emotion];
    ++close[h.closeness];
  }
  double worst = 0.0;
  auto rate = [&](int count) { return static_cast<double>(count) / kDraws; };
  for (auto n : corpus::kAllNeeds)
    worst = std::max(worst, std::abs(rate(unsat[n]) - (n == corpus::Need::kEnergy ? 0.20 : 0.40)));
  for (auto e : corpus::kNonNeutralEmotions) worst = std::max(worst, std::abs(rate(emo[e]) - 0.08));
  const double cl[4] = {0.50, 0.20, 0.20, 0.10};
  for (int k = 0; k < 4; ++k)
    worst = std::max(worst, std::abs(rate(close[static_cast<corpus::Closeness>(k)]) - cl[k]));
  char buf[120];
  std::snprintf(buf, sizeof buf, "10000 draws, max |rate - p| = %.4f", worst);
  line(worst <= 0.02, "ha-marginals", buf);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  fs::path work = fs::temp_directory_path() / "dialdiv_acceptance";
  app.add_option("--work-dir", work, "scratch directory for experiment runs");
  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::warn);
  fs::create_directories(work);

  guarded("removal-oracle", check_removal_oracle);
  guarded("skip-then-fill", check_skip_then_fill);
  guarded("reducer-oracle", check_reducers);
  guarded("dist-n-oracle", check_dist);
  guarded("sim-properties", check_sim);
  guarded("exclusiveness-identity", check_exclusiveness);
  guarded("revision-choreography", check_revision);
  guarded("end-to-end-determinism", [&] { check_determinism(work); });
  guarded("lambda-one-structure", [&] { check_lambda_one(work); });
  guarded("ha-marginals", check_ha_marginals);

  std::printf("%s: %d failing\n", failures ? "FAILED" : "ALL PASSED", failures);
  return failures ? 1 : 0;
}
