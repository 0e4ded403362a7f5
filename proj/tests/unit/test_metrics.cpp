#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <iterator>
#include <sstream>

#include "dialdiv/errors.hpp"
#include "dialdiv/metrics.hpp"

using namespace dialdiv;
using namespace dialdiv::metrics;

namespace {

using Corpus = std::vector<std::vector<std::string>>;

Corpus random_corpus(std::mt19937_64& rng) {
  static const char* vocab[] = {"a", "b", "c", "d", "e", "f", "g", "h"};
  Corpus c(2 + rng() % 5);
  for (auto& d : c) {
    std::size_t utts = 1 + rng() % 4;
    for (std::size_t u = 0; u < utts; ++u) {
      std::string s;
      std::size_t len = 3 + rng() % 8;
      for (std::size_t i = 0; i < len; ++i) s += std::string(i ? " " : "") + vocab[rng() % (2 + rng() % 6)];
      d.push_back(s);
    }
  }
  return c;
}

double brute_dist(const Corpus& c, int n) {
  std::set<std::vector<std::string>> uniq;
  std::size_t total = 0;
  for (const auto& d : c)
    for (const auto& u : d) {
      std::istringstream in(u);
      std::vector<std::string> w{std::istream_iterator<std::string>(in), {}};
      for (std::size_t i = 0; i + n <= w.size(); ++i) {
        uniq.insert({w.begin() + i, w.begin() + i + n});
        ++total;
      }
    }
  return double(uniq.size()) / double(total);
}

// Three unit vectors with pairwise cosines 0.9, 0.8, 0.7 (Cholesky of the Gram matrix).
std::vector<std::vector<double>> scripted_vectors() {
  const double g01 = 0.9, g02 = 0.8, g12 = 0.7;
  std::vector<double> v0 = {1, 0, 0};
  std::vector<double> v1 = {g01, std::sqrt(1 - g01 * g01), 0};
  double x = g02, y = (g12 - g01 * g02) / v1[1];
  std::vector<double> v2 = {x, y, std::sqrt(1 - x * x - y * y)};
  return {v0, v1, v2};
}

dialogue::Transcript transcript(std::vector<std::string> utts) {
  dialogue::Transcript t;
  t.speaker_a = "A";
  t.speaker_b = "B";
  for (std::size_t i = 0; i < utts.size(); ++i) {
    dialogue::Turn turn;
    turn.index = static_cast<int>(i);
    turn.speaker = i % 2 ? corpus::AgentId::kB : corpus::AgentId::kA;
    turn.speaker_name = i % 2 ? "B" : "A";
    turn.utterance = utts[i];
    t.turns.push_back(turn);
  }
  return t;
}

}  // namespace

TEST(Metrics, DistHandCase) {
  Corpus c = {{"hello there friend"}, {"hello there friend"}};
  EXPECT_DOUBLE_EQ(dist_n(c, 1), 0.5);
  EXPECT_DOUBLE_EQ(dist_n(c, 2), 0.5);
  EXPECT_DOUBLE_EQ(dist_n(c, 3), 0.5);
}

TEST(Metrics, DistMatchesBruteForce) {
  std::mt19937_64 rng(17);
  for (int it = 0; it < 500; ++it) {
    auto c = random_corpus(rng);
    for (int n = 1; n <= 3; ++n) EXPECT_EQ(dist_n(c, n), brute_dist(c, n));
  }
}

TEST(Metrics, DistPermutationInvariantAndDuplicateNonIncreasing) {
  std::mt19937_64 rng(18);
  for (int it = 0; it < 200; ++it) {
    auto c = random_corpus(rng);
    auto p = c;
    std::shuffle(p.begin(), p.end(), rng);
    auto dup = c;
    dup.push_back(c[rng() % c.size()]);
    for (int n = 1; n <= 3; ++n) {
      EXPECT_EQ(dist_n(c, n), dist_n(p, n));
      EXPECT_LE(dist_n(dup, n), dist_n(c, n));
    }
  }
}

TEST(Metrics, NgramsStayInsideUtterances) {
  Corpus c = {{"a b", "c d"}};
  EXPECT_EQ(ngram_counts(c, 2).total, 2u);
  EXPECT_EQ(ngram_counts(c, 3).total, 0u);
  EXPECT_THROW(dist_n(c, 3), TooShort);
  EXPECT_THROW(dist_n({{"a"}}, 2), TooShort);
}

TEST(Metrics, PunctuationAndCaseIgnored) {
  EXPECT_DOUBLE_EQ(dist_n({{"Hello, there!"}, {"hello there"}}, 1), 0.5);
}

TEST(Metrics, LengthMatchedTruncates) {
  Corpus c = {{"a b c"}, {"a b c d e f"}};
  EXPECT_DOUBLE_EQ(dist_n(c, 1, true), 0.5);
  EXPECT_EQ(ngram_counts(c, 1, 3).total, 6u);
}

TEST(Metrics, SimIdenticalIsOne) {
  backend::MockBackend be;
  for (std::size_t k = 2; k <= 6; ++k)
    EXPECT_NEAR(sim(std::vector<std::string>(k, "A: hi there\nB: hello"), be), 1.0, 1e-6);
  EXPECT_THROW(sim({"x"}, be), TooShort);
}

TEST(Metrics, SimScriptedCosines) {
  backend::MockBackend be;
  auto v = scripted_vectors();
  be.set_embedding("x", v[0]);
  be.set_embedding("y", v[1]);
  be.set_embedding("z", v[2]);
  EXPECT_NEAR(sim({"x", "y", "z"}, be), 0.8, 1e-12);
  EXPECT_NEAR(sim({"z", "x", "y"}, be), 0.8, 1e-12);
}

TEST(Metrics, ExclusivenessIdentity) {
  backend::MockBackend be;
  std::mt19937_64 rng(4);
  for (int it = 0; it < 20; ++it) {
    std::vector<DialogueSample> a;
    for (const auto& d : random_corpus(rng)) {
      DialogueSample s;
      s.utterances = d;
      for (const auto& u : d) s.text += u + "\n";
      a.push_back(s);
    }
    auto e = exclusiveness(a, a, be);
    EXPECT_NEAR(e.avg_max_sim, 1.0, 1e-6);
    for (double x : e.excl) EXPECT_EQ(x, 0.0);
  }
}

TEST(Metrics, ExclusivenessDisjoint) {
  backend::MockBackend be;
  std::vector<DialogueSample> a = {{"a b c", {"a b c"}}};
  std::vector<DialogueSample> b = {{"a b d", {"a b d"}}};
  auto e = exclusiveness(a, b, be);
  EXPECT_DOUBLE_EQ(e.excl[0], 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(e.excl[1], 1.0 / 2.0);
  EXPECT_DOUBLE_EQ(e.excl[2], 1.0);
}

TEST(Metrics, LastTurnRepetition) {
  std::vector<dialogue::Transcript> t = {transcript({"Hi.", "Bye.", "hi."}), transcript({"Hi.", "Bye."}),
                                         transcript({"Only."}), transcript({"x", "y", "Y"})};
  EXPECT_DOUBLE_EQ(last_turn_repetition_rate(t), 0.5);
}

TEST(Metrics, PerUtteranceCurve) {
  backend::MockBackend be;
  std::vector<dialogue::Transcript> t = {transcript({"a b c d", "one two three"}),
                                         transcript({"a b c e", "four five"}), transcript({"z y x"})};
  auto pts = per_utterance_diversity(t, be);
  ASSERT_EQ(pts.size(), 2u);
  EXPECT_EQ(pts[0].contributors, 3u);
  EXPECT_DOUBLE_EQ(pts[0].dist3, 4.0 / 5.0);
  EXPECT_EQ(pts[1].contributors, 2u);
  EXPECT_DOUBLE_EQ(pts[1].dist3, 1.0);
}

TEST(Metrics, ReportExcludesFailures) {
  backend::MockBackend be;
  auto bad = transcript({"x y z"});
  bad.failed = true;
  std::vector<dialogue::Transcript> t = {transcript({"a b c", "d e f"}), transcript({"a b c", "g h i"}), bad};
  auto r = report(t, be);
  EXPECT_EQ(r.n, 2u);
  EXPECT_EQ(r.failed, 1u);
  EXPECT_DOUBLE_EQ(r.dist[0], 9.0 / 12.0);
  EXPECT_DOUBLE_EQ(r.mean_turns, 2.0);
  EXPECT_TRUE(std::isnan(r.removed_inconsistency));
  EXPECT_THROW(report({transcript({"a b c"}), bad}, be), TooShort);
}

TEST(Metrics, AggregateSkipsNan) {
  MetricsReport a, b;
  a.sim = 0.2;
  b.sim = 0.4;
  a.removed_inconsistency = std::nan("");
  b.removed_inconsistency = 5.0;
  auto g = aggregate({a, b});
  EXPECT_DOUBLE_EQ(g.sim, 0.3);
  EXPECT_DOUBLE_EQ(g.removed_inconsistency, 5.0);
  EXPECT_EQ(g.case_id, "ALL");
}

TEST(Metrics, CsvShape) {
  MetricsReport r;
  r.removed_inconsistency = std::nan("");
  auto row = csv_row(r);
  EXPECT_EQ(row.size(), csv_header().size());
  bool has_empty = false;
  for (const auto& c : row) has_empty |= c.empty();
  EXPECT_TRUE(has_empty);
}
