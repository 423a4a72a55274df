#pragma once
// Hybrid weight-based data sampling: tags get 1/f + ln(f_max) - ln(f),
// items inherit their tags' weights, and a draw-and-remove pass samples
// ceil(alpha * |D|) items without replacement, proportionally to the
// remaining weights. Rare but significant tags end up over-represented.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tagroute/types.hpp"

namespace tagroute {

struct SampleItem {
  std::string id;
  TagSet tags;
};

struct SamplePlan {
  double alpha = 0.1;       // sampling ratio in (0, 1]
  std::uint64_t seed = 0;
  std::optional<std::size_t> n_override;  // explicit sample size, for tests

  // n = ceil(alpha * dataset_size), unless overridden.
  std::size_t sample_size(std::size_t dataset_size) const;
};

enum class WeightMode { Sum, Mean, Max };

WeightMode parse_weight_mode(std::string_view text);

struct HybridWeights {
  std::map<std::string, double> per_tag;
  std::map<std::string, double> per_item;
  std::map<std::string, double> normalized;  // sums to 1 within 1e-9
};

// 1/f_t + ln(f_max) - ln(f_t); requires 1 <= f_t <= f_max.
double hybrid_tag_weight(std::uint64_t f_t, std::uint64_t f_max);

// Tag frequency = number of items whose tag set contains the tag.
std::map<std::string, std::uint64_t> tag_frequencies(
    std::span<const SampleItem> items);

// Item weight combines its tags' hybrid weights (sum by default).
HybridWeights item_weights(std::span<const SampleItem> items,
                           const std::map<std::string, std::uint64_t>& freq,
                           WeightMode mode = WeightMode::Sum);

// Sequential weighted draw without replacement; deterministic given seed.
// Returns item ids in draw order.
std::vector<std::string> weighted_sample(std::span<const SampleItem> items,
                                         const HybridWeights& weights,
                                         const SamplePlan& plan);

}  // namespace tagroute
