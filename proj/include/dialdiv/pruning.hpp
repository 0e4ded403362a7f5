#pragma once

// Attention-guided unit removal controlled by λ ∈ [0,1].

#include <string>
#include <vector>

#include "dialdiv/attention.hpp"
#include "dialdiv/prompt.hpp"

namespace dialdiv::pruning {

enum class Strategy { kDescending, kAscending };
enum class Which { kHi, kLo };

std::string_view to_string(Strategy s);
Strategy strategy_from_string(std::string_view s);

/// Relative slack on the S_target comparisons, so that λ=1 removes every unit
/// regardless of summation order.
inline constexpr double kTargetSlack = 1e-12;

struct PruningPlan {
  double lambda = 0.0;
  Strategy strategy = Strategy::kDescending;
  std::vector<std::string> removed_unit_ids;  // selection order
  double removed_score_sum = 0.0;
  double target = 0.0;
  double word_removal_ratio = 0.0;
};

/// Scan units sorted by score (ties: earlier prompt position first); add a unit
/// while the running sum stays within S_target = λ·Σa_u, stop once the running
/// sum reaches it. λ=0 removes nothing and λ=1 removes every unit, zero scores
/// included. `scores` must be in prompt order. Throws InvalidLambda.
PruningPlan select_removal(const std::vector<attention::UnitScore>& scores, double lambda,
                           Strategy strategy);

/// select_removal plus the word removal ratio measured on `p`.
PruningPlan plan(const prompt::Prompt& p, const std::vector<attention::UnitScore>& scores,
                 double lambda, Strategy strategy);

/// Removes the planned units and drops emptied content blocks. Throws UnknownUnit.
prompt::Prompt apply(const prompt::Prompt& p, const PruningPlan& plan);

/// Keeps only the highest (Hi) or lowest (Lo) scoring removable unit of
/// `block`; every other removable unit is removed. Throws EmptyBlockChoice.
prompt::Prompt retain_one(const prompt::Prompt& p, const std::vector<attention::UnitScore>& scores,
                          prompt::BlockId block, Which which);

/// Words in removed units over words in all removable units (0 when the
/// prompt has no removable words).
double word_removal_ratio(const prompt::Prompt& p, const PruningPlan& plan);

}  // namespace dialdiv::pruning
