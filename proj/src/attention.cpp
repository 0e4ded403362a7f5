#include "dialdiv/attention.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>

#include <spdlog/spdlog.h>

#include "dialdiv/errors.hpp"

namespace dialdiv::attention {

std::string_view to_string(Reducer r) {
  return r == Reducer::kSumMean ? "sum_mean" : "mean_mean";
}

Reducer reducer_from_string(std::string_view s) {
  if (s == "sum_mean") return Reducer::kSumMean;
  if (s == "mean_mean") return Reducer::kMeanMean;
  throw Error("unknown reducer: " + std::string(s));
}

HeadMatrix reduce(const AttentionTensor& t, Reducer reducer) {
  if (t.empty()) throw EmptyTensor("attention tensor has an empty dimension");
  if (t.values.size() != t.layers * t.heads * t.unit_tokens * t.response_tokens)
    throw Error("attention tensor size does not match its shape");
  HeadMatrix out{t.layers, t.heads, std::vector<double>(t.layers * t.heads)};
  kernels::reduce_tensor(t.values, t.layers, t.heads, t.unit_tokens, t.response_tokens, reducer,
                         out.values);
  return out;
}

double aggregate(const HeadMatrix& r) {
  return kernels::layer_sum_head_mean(r.values, r.layers, r.heads);
}

double unit_score(const AttentionTensor& tensor, Reducer reducer) {
  return aggregate(reduce(tensor, reducer));
}

std::vector<UnitScore> score_units(const prompt::Prompt& p, backend::GenerationBackend& be,
                                   const ScoringOptions& opts) {
  if (opts.samples < 1) throw Error("scoring needs at least one sample");
  if (!opts.sample_seeds.empty() && opts.sample_seeds.size() != static_cast<std::size_t>(opts.samples))
    throw Error("sample_seeds size differs from samples");

  prompt::Prompt bound = p;
  if (const auto* tok = be.tokenizer()) bound = backend::bind_token_spans(p, *tok);
  const auto removable = prompt::removable_units(bound);

  std::vector<UnitScore> scores;
  scores.reserve(removable.size());
  for (const auto* u : removable) scores.push_back({u->id, 0.0, {}, opts.reducer});
  if (removable.empty()) return scores;

  for (int s = 0; s < opts.samples; ++s) {
    auto cfg = opts.decoding;
    cfg.seed = opts.sample_seeds.empty() ? opts.decoding.seed + static_cast<std::uint64_t>(s)
                                         : opts.sample_seeds[static_cast<std::size_t>(s)];
    auto result = backend::generate(be, bound, cfg, true);
    for (std::size_t k = 0; k < removable.size(); ++k) {
      const auto* u = removable[k];
      auto it = result.unit_attention.find(u->id);
      if (it == result.unit_attention.end())
        throw SpanBindingError("no attention returned for unit " + u->id);
      const auto& t = it->second;
      if (u->token_span) {
        const auto want = u->token_span->size();
        if (t.unit_tokens + 1 < want)
          throw SpanBindingError("unit " + u->id + " has " + std::to_string(t.unit_tokens) +
                                 " attention rows for a span of " + std::to_string(want));
        if (t.unit_tokens + 1 == want)
          spdlog::warn("unit {} attention is one token short of its span", u->id);
      }
      scores[k].per_sample.push_back(unit_score(t, opts.reducer));
    }
  }
  for (auto& sc : scores)
    sc.a_u = std::accumulate(sc.per_sample.begin(), sc.per_sample.end(), 0.0) /
             static_cast<double>(sc.per_sample.size());
  return scores;
}

PostRemovalStats post_removal_stats(const std::vector<UnitScore>& before,
                                    const std::vector<UnitScore>& after) {
  PostRemovalStats out;
  double total_before = 0.0;
  for (const auto& s : before) total_before += s.a_u;
  std::vector<double> kept;
  for (const auto& s : after) kept.push_back(s.a_u);
  const double total_after = std::accumulate(kept.begin(), kept.end(), 0.0);
  out.retention_percent = total_before > 0.0 ? 100.0 * total_after / total_before : 0.0;
  if (kept.empty() || total_after <= 0.0) return out;
  std::sort(kept.begin(), kept.end(), std::greater<>());
  for (std::size_t i = 0; i < std::min<std::size_t>(3, kept.size()); ++i)
    out.top_shares.push_back(kept[i] / total_after);
  return out;
}

}  // namespace dialdiv::attention
