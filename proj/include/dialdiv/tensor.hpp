#pragma once

#include <cstddef>
#include <vector>

namespace dialdiv {

/// Attention from n response tokens to the m tokens of one prompt unit, for
/// every layer and head. Row-major L×H×m×n.
struct AttentionTensor {
  std::size_t layers = 0;
  std::size_t heads = 0;
  std::size_t unit_tokens = 0;
  std::size_t response_tokens = 0;
  std::vector<double> values;

  AttentionTensor() = default;
  AttentionTensor(std::size_t l, std::size_t h, std::size_t m, std::size_t n, double fill = 0.0)
      : layers(l), heads(h), unit_tokens(m), response_tokens(n), values(l * h * m * n, fill) {}

  std::size_t index(std::size_t l, std::size_t h, std::size_t i, std::size_t j) const {
    return ((l * heads + h) * unit_tokens + i) * response_tokens + j;
  }
  double& at(std::size_t l, std::size_t h, std::size_t i, std::size_t j) { return values[index(l, h, i, j)]; }
  double at(std::size_t l, std::size_t h, std::size_t i, std::size_t j) const { return values[index(l, h, i, j)]; }
  bool empty() const { return unit_tokens == 0 || response_tokens == 0 || layers == 0 || heads == 0; }
  bool operator==(const AttentionTensor&) const = default;
};

}  // namespace dialdiv
