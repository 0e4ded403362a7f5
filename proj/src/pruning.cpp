#include "dialdiv/pruning.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "dialdiv/errors.hpp"
#include "dialdiv/text.hpp"

namespace dialdiv::pruning {

std::string_view to_string(Strategy s) { return s == Strategy::kDescending ? "desc" : "asc"; }

Strategy strategy_from_string(std::string_view s) {
  if (s == "desc" || s == "descending") return Strategy::kDescending;
  if (s == "asc" || s == "ascending") return Strategy::kAscending;
  throw Error("unknown strategy: " + std::string(s));
}

PruningPlan select_removal(const std::vector<attention::UnitScore>& scores, double lambda,
                           Strategy strategy) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidLambda("lambda must lie in [0, 1]");
  for (const auto& s : scores)
    if (!(s.a_u >= 0.0)) throw Error("negative attention score for unit " + s.unit_id);

  PruningPlan out;
  out.lambda = lambda;
  out.strategy = strategy;

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return strategy == Strategy::kDescending ? scores[a].a_u > scores[b].a_u
                                             : scores[a].a_u < scores[b].a_u;
  });

  double total = 0.0;
  for (const auto& s : scores) total += s.a_u;
  out.target = lambda * total;
  const double slack = kTargetSlack * total;

  double cur = 0.0;
  if (lambda == 1.0) {
    // zero-score units would otherwise survive the early break
    for (auto k : order) out.removed_unit_ids.push_back(scores[k].unit_id);
    out.removed_score_sum = total;
    return out;
  }
  if (lambda == 0.0) return out;
  for (auto k : order) {
    const double a = scores[k].a_u;
    if (cur + a <= out.target + slack) {
      cur += a;
      out.removed_unit_ids.push_back(scores[k].unit_id);
    }
    if (cur >= out.target - slack) break;
  }
  out.removed_score_sum = cur;
  return out;
}

PruningPlan plan(const prompt::Prompt& p, const std::vector<attention::UnitScore>& scores,
                 double lambda, Strategy strategy) {
  auto out = select_removal(scores, lambda, strategy);
  out.word_removal_ratio = word_removal_ratio(p, out);
  return out;
}

prompt::Prompt apply(const prompt::Prompt& p, const PruningPlan& plan) {
  std::set<std::string> ids;
  for (const auto& id : plan.removed_unit_ids) {
    const auto* u = p.find(id);
    if (!u) throw UnknownUnit("unit not in prompt: " + id);
    if (!u->removable) throw UnknownUnit("unit is not removable: " + id);
    ids.insert(id);
  }
  if (ids.empty()) return p;
  return prompt::drop_empty_blocks(p.without_units(ids));
}

prompt::Prompt retain_one(const prompt::Prompt& p, const std::vector<attention::UnitScore>& scores,
                          prompt::BlockId block, Which which) {
  const attention::UnitScore* best = nullptr;
  for (const auto& s : scores) {
    const auto* u = p.find(s.unit_id);
    if (!u) throw UnknownUnit("unit not in prompt: " + s.unit_id);
    if (u->block != block || !u->removable) continue;
    const bool better = !best || (which == Which::kHi ? s.a_u > best->a_u : s.a_u < best->a_u);
    if (better) best = &s;
  }
  if (!best)
    throw EmptyBlockChoice("no removable unit in block " + std::string(prompt::to_string(block)));
  std::set<std::string> ids;
  for (const auto* u : prompt::removable_units(p))
    if (u->id != best->unit_id) ids.insert(u->id);
  return prompt::drop_empty_blocks(p.without_units(ids));
}

double word_removal_ratio(const prompt::Prompt& p, const PruningPlan& plan) {
  const std::set<std::string> removed(plan.removed_unit_ids.begin(), plan.removed_unit_ids.end());
  double all = 0.0;
  double gone = 0.0;
  for (const auto* u : prompt::removable_units(p)) {
    const auto w = static_cast<double>(text::word_count(u->content));
    all += w;
    if (removed.contains(u->id)) gone += w;
  }
  return all > 0.0 ? gone / all : 0.0;
}

}  // namespace dialdiv::pruning
