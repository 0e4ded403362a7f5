#pragma once

// Unit attention scores: L×H×m×n tensor -> L×H (reducer) -> scalar a_u
// (sum over layers of the head mean), averaged over sampled responses.

#include <string>
#include <vector>

#include "dialdiv/backend.hpp"
#include "dialdiv/kernels.hpp"
#include "dialdiv/tensor.hpp"

namespace dialdiv::attention {

using kernels::Reducer;

std::string_view to_string(Reducer r);
Reducer reducer_from_string(std::string_view s);

/// L×H matrix, row-major.
struct HeadMatrix {
  std::size_t layers = 0;
  std::size_t heads = 0;
  std::vector<double> values;
  double at(std::size_t l, std::size_t h) const { return values[l * heads + h]; }
};

/// Throws EmptyTensor when m or n (or L, H) is zero.
HeadMatrix reduce(const AttentionTensor& tensor, Reducer reducer);
double aggregate(const HeadMatrix& reduced);
/// aggregate(reduce(tensor, reducer)).
double unit_score(const AttentionTensor& tensor, Reducer reducer);

struct UnitScore {
  std::string unit_id;
  double a_u = 0.0;
  std::vector<double> per_sample;
  Reducer reducer = Reducer::kSumMean;
};

struct ScoringOptions {
  int samples = 3;
  Reducer reducer = Reducer::kSumMean;
  backend::DecodingConfig decoding;
  /// Seed of each sampled response; size must equal `samples` when given,
  /// otherwise decoding.seed + i is used.
  std::vector<std::uint64_t> sample_seeds;
};

/// Scores of the removable units of `p`, in prompt order. Throws
/// SpanBindingError when a removable unit has no tensor or its tensor is more
/// than one token short of the bound span.
std::vector<UnitScore> score_units(const prompt::Prompt& p, backend::GenerationBackend& backend,
                                   const ScoringOptions& opts);

struct PostRemovalStats {
  double retention_percent = 0.0;
  /// Up to three largest surviving scores as fractions of the surviving total;
  /// empty when nothing survived.
  std::vector<double> top_shares;
};

PostRemovalStats post_removal_stats(const std::vector<UnitScore>& before,
                                    const std::vector<UnitScore>& after);

}  // namespace dialdiv::attention
