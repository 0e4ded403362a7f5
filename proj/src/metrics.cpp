#include "dialdiv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <unordered_set>

#include "dialdiv/errors.hpp"
#include "dialdiv/kernels.hpp"
#include "dialdiv/text.hpp"

namespace dialdiv::metrics {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using Tokenized = std::vector<std::vector<std::string>>;  // utterance -> tokens

Tokenized tokenize(const std::vector<std::string>& utterances, std::optional<std::size_t> budget) {
  Tokenized out;
  std::size_t left = budget.value_or(std::numeric_limits<std::size_t>::max());
  for (const auto& u : utterances) {
    if (left == 0) break;
    auto toks = text::metric_tokens(u);
    if (toks.size() > left) toks.resize(left);
    left -= toks.size();
    out.push_back(std::move(toks));
  }
  return out;
}

std::size_t token_total(const std::vector<std::string>& utterances) {
  std::size_t n = 0;
  for (const auto& u : utterances) n += text::metric_tokens(u).size();
  return n;
}

template <class F>
void for_each_ngram(const Tokenized& dialogue, int n, F&& f) {
  const auto N = static_cast<std::size_t>(n);
  std::string key;
  for (const auto& toks : dialogue) {
    if (toks.size() < N) continue;
    for (std::size_t i = 0; i + N <= toks.size(); ++i) {
      key.clear();
      for (std::size_t k = 0; k < N; ++k) {
        if (k) key.push_back('\x1f');
        key += toks[i + k];
      }
      f(key);
    }
  }
}

std::unordered_set<std::string> unique_ngrams(const std::vector<DialogueSample>& set, int n) {
  std::unordered_set<std::string> out;
  for (const auto& d : set)
    for_each_ngram(tokenize(d.utterances, std::nullopt), n, [&](const std::string& k) { out.insert(k); });
  return out;
}

std::vector<double> flat_embeddings(const std::vector<std::string>& texts,
                                    backend::GenerationBackend& embedder, std::size_t& dim) {
  auto vecs = backend::embed(embedder, texts);
  dim = vecs.front().size();
  std::vector<double> flat;
  flat.reserve(vecs.size() * dim);
  for (const auto& v : vecs) {
    if (v.size() != dim) throw BackendError("embedding dimension mismatch");
    flat.insert(flat.end(), v.begin(), v.end());
  }
  return flat;
}

double mean_or_nan(const std::vector<double>& xs) {
  double s = 0.0;
  std::size_t n = 0;
  for (double x : xs)
    if (!std::isnan(x)) s += x, ++n;
  return n ? s / static_cast<double>(n) : kNaN;
}

}  // namespace

DialogueSample sample_of(const dialogue::Transcript& t) {
  DialogueSample s;
  s.text = dialogue::dialogue_text(t);
  for (const auto& turn : t.turns) s.utterances.push_back(turn.utterance);
  return s;
}

NgramCounts ngram_counts(const std::vector<std::vector<std::string>>& dialogues, int n,
                         std::optional<std::size_t> max_tokens) {
  if (n < 1) throw Error("n-gram order must be positive");
  std::unordered_set<std::string> seen;
  NgramCounts c;
  for (const auto& d : dialogues)
    for_each_ngram(tokenize(d, max_tokens), n, [&](const std::string& k) {
      ++c.total;
      seen.insert(k);
    });
  c.unique = seen.size();
  return c;
}

double dist_n(const std::vector<std::vector<std::string>>& dialogues, int n, bool length_matched) {
  if (dialogues.empty()) throw TooShort("dist_n needs at least one dialogue");
  std::size_t shortest = std::numeric_limits<std::size_t>::max();
  for (const auto& d : dialogues) {
    const auto len = token_total(d);
    if (len < static_cast<std::size_t>(n)) throw TooShort("dialogue shorter than the n-gram order");
    shortest = std::min(shortest, len);
  }
  const auto c = ngram_counts(dialogues, n, length_matched ? std::optional(shortest) : std::nullopt);
  if (c.total == 0) throw TooShort("no utterance holds an n-gram of this order");
  return static_cast<double>(c.unique) / static_cast<double>(c.total);
}

double sim(const std::vector<std::string>& texts, backend::GenerationBackend& embedder) {
  if (texts.size() < 2) throw TooShort("sim needs at least two dialogues");
  std::size_t dim = 0;
  const auto flat = flat_embeddings(texts, embedder, dim);
  return kernels::mean_pairwise_cosine(flat, texts.size(), dim);
}

Exclusiveness exclusiveness(const std::vector<DialogueSample>& a, const std::vector<DialogueSample>& b,
                            backend::GenerationBackend& embedder) {
  if (a.empty() || b.empty()) throw TooShort("exclusiveness needs two nonempty sets");
  std::vector<std::string> ta, tb;
  for (const auto& d : a) ta.push_back(d.text);
  for (const auto& d : b) tb.push_back(d.text);
  std::size_t dim_a = 0, dim_b = 0;
  const auto ea = flat_embeddings(ta, embedder, dim_a);
  const auto eb = flat_embeddings(tb, embedder, dim_b);
  if (dim_a != dim_b) throw BackendError("embedding dimension mismatch");
  const auto best = kernels::max_cosine_to_set(eb, tb.size(), ea, ta.size(), dim_a);

  Exclusiveness out;
  out.avg_max_sim = std::accumulate(best.begin(), best.end(), 0.0) / static_cast<double>(best.size());
  for (int n = 1; n <= 3; ++n) {
    const auto ua = unique_ngrams(a, n);
    const auto ub = unique_ngrams(b, n);
    std::size_t only_b = 0;
    for (const auto& g : ub)
      if (!ua.contains(g)) ++only_b;
    out.excl[n - 1] = ub.empty() ? 0.0 : static_cast<double>(only_b) / static_cast<double>(ub.size());
  }
  return out;
}

std::vector<UtterancePoint> per_utterance_diversity(const std::vector<dialogue::Transcript>& trials,
                                                    backend::GenerationBackend& embedder) {
  std::size_t longest = 0;
  for (const auto& t : trials) longest = std::max(longest, t.turns.size());
  std::vector<UtterancePoint> out;
  for (std::size_t i = 0; i < longest; ++i) {
    std::vector<std::string> utts;
    for (const auto& t : trials)
      if (t.turns.size() > i) utts.push_back(t.turns[i].utterance);
    if (utts.size() < 2) continue;
    UtterancePoint p;
    p.index = i;
    p.contributors = utts.size();
    std::vector<std::vector<std::string>> ds;
    for (const auto& u : utts) ds.push_back({u});
    const auto c = ngram_counts(ds, 3);
    p.dist3 = c.total ? static_cast<double>(c.unique) / static_cast<double>(c.total) : kNaN;
    p.sim = sim(utts, embedder);
    out.push_back(p);
  }
  return out;
}

double last_turn_repetition_rate(const std::vector<dialogue::Transcript>& trials) {
  if (trials.empty()) throw TooShort("repetition rate needs at least one transcript");
  std::size_t repeated = 0;
  for (const auto& t : trials) {
    if (t.turns.size() < 2) continue;
    const auto last = text::normalize(t.turns.back().utterance);
    for (std::size_t i = 0; i + 1 < t.turns.size(); ++i)
      if (text::normalize(t.turns[i].utterance) == last) {
        ++repeated;
        break;
      }
  }
  return static_cast<double>(repeated) / static_cast<double>(trials.size());
}

MetricsReport report(const std::vector<dialogue::Transcript>& trials, backend::GenerationBackend& embedder) {
  MetricsReport r;
  std::vector<dialogue::Transcript> ok;
  for (const auto& t : trials) {
    if (t.failed || t.turns.empty()) ++r.failed;
    else ok.push_back(t);
  }
  if (!trials.empty()) {
    r.case_id = trials.front().case_id;
    r.condition = trials.front().condition;
  }
  r.n = ok.size();
  if (ok.size() < 2) throw TooShort("fewer than two usable transcripts for " + r.case_id);

  std::vector<std::string> texts;
  std::vector<std::vector<std::string>> dialogues;
  std::vector<double> ratios, removed, rinc, finc, ret, top[3], rollbacks;
  double turns = 0.0, words = 0.0, ended = 0.0;
  for (const auto& t : ok) {
    const auto s = sample_of(t);
    texts.push_back(s.text);
    dialogues.push_back(s.utterances);
    turns += static_cast<double>(t.turns.size());
    ended += t.ended_by_flag ? 1.0 : 0.0;
    for (const auto& turn : t.turns) {
      words += static_cast<double>(text::word_count(turn.utterance));
      ratios.push_back(turn.plan.word_removal_ratio);
      removed.push_back(static_cast<double>(turn.plan.removed_unit_ids.size()));
      rinc.push_back(turn.removed_inconsistency.value_or(kNaN));
      finc.push_back(turn.full_inconsistency.value_or(kNaN));
      int rb = 0;
      for (const auto& e : turn.revision_events) rb += e.candidate_index > 0 ? 1 : 0;
      rollbacks.push_back(static_cast<double>(rb));
      if (turn.post_removal) {
        ret.push_back(turn.post_removal->retention_percent);
        for (std::size_t k = 0; k < 3; ++k)
          top[k].push_back(k < turn.post_removal->top_shares.size() ? turn.post_removal->top_shares[k] : kNaN);
      }
    }
  }
  const double n = static_cast<double>(ok.size());
  r.sim = sim(texts, embedder);
  for (int k = 1; k <= 3; ++k) {
    try {
      r.dist[k - 1] = dist_n(dialogues, k);
    } catch (const TooShort&) {
      r.dist[k - 1] = kNaN;
    }
  }
  try {
    r.dist3_length_matched = dist_n(dialogues, 3, true);
  } catch (const TooShort&) {
    r.dist3_length_matched = kNaN;
  }
  r.last_turn_repetition = last_turn_repetition_rate(ok);
  r.mean_turns = turns / n;
  r.mean_words = words / n;
  r.ended_by_flag_rate = ended / n;
  r.word_removal_ratio = mean_or_nan(ratios);
  r.removed_units = mean_or_nan(removed);
  r.removed_inconsistency = mean_or_nan(rinc);
  r.full_inconsistency = mean_or_nan(finc);
  r.retention_percent = mean_or_nan(ret);
  for (int k = 0; k < 3; ++k) r.top_share[k] = mean_or_nan(top[k]);
  r.rollbacks = mean_or_nan(rollbacks);
  return r;
}

MetricsReport aggregate(const std::vector<MetricsReport>& per_case) {
  if (per_case.empty()) throw TooShort("aggregate needs at least one report");
  MetricsReport out;
  out.experiment = per_case.front().experiment;
  out.condition = per_case.front().condition;
  out.case_id = "ALL";
  auto mean = [&](auto get) {
    std::vector<double> xs;
    for (const auto& r : per_case) xs.push_back(get(r));
    return mean_or_nan(xs);
  };
  for (const auto& r : per_case) {
    out.n += r.n;
    out.failed += r.failed;
  }
  out.sim = mean([](const MetricsReport& r) { return r.sim; });
  for (int k = 0; k < 3; ++k) {
    out.dist[k] = mean([k](const MetricsReport& r) { return r.dist[k]; });
    out.top_share[k] = mean([k](const MetricsReport& r) { return r.top_share[k]; });
  }
  out.dist3_length_matched = mean([](const MetricsReport& r) { return r.dist3_length_matched; });
  out.last_turn_repetition = mean([](const MetricsReport& r) { return r.last_turn_repetition; });
  out.mean_turns = mean([](const MetricsReport& r) { return r.mean_turns; });
  out.mean_words = mean([](const MetricsReport& r) { return r.mean_words; });
  out.ended_by_flag_rate = mean([](const MetricsReport& r) { return r.ended_by_flag_rate; });
  out.word_removal_ratio = mean([](const MetricsReport& r) { return r.word_removal_ratio; });
  out.removed_units = mean([](const MetricsReport& r) { return r.removed_units; });
  out.removed_inconsistency = mean([](const MetricsReport& r) { return r.removed_inconsistency; });
  out.full_inconsistency = mean([](const MetricsReport& r) { return r.full_inconsistency; });
  out.retention_percent = mean([](const MetricsReport& r) { return r.retention_percent; });
  out.rollbacks = mean([](const MetricsReport& r) { return r.rollbacks; });
  return out;
}

std::vector<std::string> csv_header() {
  return {"experiment", "condition", "case_id", "n", "failed", "sim", "dist1", "dist2", "dist3",
          "dist3_length_matched", "last_turn_repetition", "mean_turns", "mean_words",
          "ended_by_flag_rate", "word_removal_ratio", "removed_units", "removed_inconsistency",
          "full_inconsistency", "retention_percent", "top1_share", "top2_share", "top3_share",
          "rollbacks"};
}

std::vector<std::string> csv_row(const MetricsReport& r) {
  auto num = [](double x) -> std::string {
    if (std::isnan(x)) return "";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return buf;
  };
  return {r.experiment,
          r.condition,
          r.case_id,
          std::to_string(r.n),
          std::to_string(r.failed),
          num(r.sim),
          num(r.dist[0]),
          num(r.dist[1]),
          num(r.dist[2]),
          num(r.dist3_length_matched),
          num(r.last_turn_repetition),
          num(r.mean_turns),
          num(r.mean_words),
          num(r.ended_by_flag_rate),
          num(r.word_removal_ratio),
          num(r.removed_units),
          num(r.removed_inconsistency),
          num(r.full_inconsistency),
          num(r.retention_percent),
          num(r.top_share[0]),
          num(r.top_share[1]),
          num(r.top_share[2]),
          num(r.rollbacks)};
}

}  // namespace dialdiv::metrics
