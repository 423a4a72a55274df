#include "tagroute/sampler.hpp"

#include <algorithm>
#include <cmath>

#include "tagroute/util.hpp"

namespace tagroute {

std::size_t SamplePlan::sample_size(std::size_t dataset_size) const {
  if (n_override) return *n_override;
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    fail(Errc::InvalidConfig, "alpha must lie in (0, 1]");
  }
  return static_cast<std::size_t>(
      std::ceil(alpha * static_cast<double>(dataset_size)));
}

WeightMode parse_weight_mode(std::string_view text) {
  if (text == "sum") return WeightMode::Sum;
  if (text == "mean") return WeightMode::Mean;
  if (text == "max") return WeightMode::Max;
  fail(Errc::ParseError, "unknown weight mode '" + std::string(text) + "'");
}

double hybrid_tag_weight(std::uint64_t f_t, std::uint64_t f_max) {
  if (f_t == 0 || f_t > f_max) {
    fail(Errc::InvariantViolation, "hybrid weight requires 1 <= f_t <= f_max");
  }
  return 1.0 / static_cast<double>(f_t) +
         std::log(static_cast<double>(f_max)) -
         std::log(static_cast<double>(f_t));
}

std::map<std::string, std::uint64_t> tag_frequencies(
    std::span<const SampleItem> items) {
  std::map<std::string, std::uint64_t> freq;
  for (const SampleItem& item : items) {
    for (const Tag& tag : item.tags) {
      ++freq[tag.name()];
    }
  }
  return freq;
}

HybridWeights item_weights(std::span<const SampleItem> items,
                           const std::map<std::string, std::uint64_t>& freq,
                           WeightMode mode) {
  std::uint64_t f_max = 0;
  for (const auto& [tag, f] : freq) {
    (void)tag;
    f_max = std::max(f_max, f);
  }

  HybridWeights weights;
  for (const auto& [tag, f] : freq) {
    weights.per_tag[tag] = hybrid_tag_weight(f, f_max);
  }

  double total = 0.0;
  for (const SampleItem& item : items) {
    if (item.tags.empty()) {
      fail(Errc::UntaggedItem, "item '" + item.id + "' has no tags");
    }
    double combined = 0.0;
    for (const Tag& tag : item.tags) {
      auto it = weights.per_tag.find(tag.name());
      if (it == weights.per_tag.end()) {
        fail(Errc::InvariantViolation,
             "item '" + item.id + "' carries an unknown tag frequency");
      }
      switch (mode) {
        case WeightMode::Sum:
        case WeightMode::Mean:
          combined += it->second;
          break;
        case WeightMode::Max:
          combined = std::max(combined, it->second);
          break;
      }
    }
    if (mode == WeightMode::Mean) {
      combined /= static_cast<double>(item.tags.size());
    }
    weights.per_item[item.id] = combined;
    total += combined;
  }
  for (const auto& [id, w] : weights.per_item) {
    weights.normalized[id] = w / total;
  }
  return weights;
}

std::vector<std::string> weighted_sample(std::span<const SampleItem> items,
                                         const HybridWeights& weights,
                                         const SamplePlan& plan) {
  const std::size_t n = plan.sample_size(items.size());
  if (n > items.size()) {
    fail(Errc::SampleTooLarge, "requested " + std::to_string(n) +
                                   " samples from " +
                                   std::to_string(items.size()) + " items");
  }

  std::vector<std::string> pool_ids;
  std::vector<double> pool_weights;
  pool_ids.reserve(items.size());
  pool_weights.reserve(items.size());
  for (const SampleItem& item : items) {
    auto it = weights.normalized.find(item.id);
    if (it == weights.normalized.end()) {
      fail(Errc::InvariantViolation, "no weight for item '" + item.id + "'");
    }
    pool_ids.push_back(item.id);
    pool_weights.push_back(it->second);
  }

  std::mt19937_64 rng(plan.seed);
  std::vector<std::string> sampled;
  sampled.reserve(n);
  double remaining = 0.0;
  for (double w : pool_weights) remaining += w;

  for (std::size_t draw = 0; draw < n; ++draw) {
    const double target = uniform_unit(rng) * remaining;
    double cumulative = 0.0;
    std::size_t picked = pool_ids.size() - 1;  // guard against rounding
    for (std::size_t i = 0; i < pool_ids.size(); ++i) {
      cumulative += pool_weights[i];
      if (target < cumulative) {
        picked = i;
        break;
      }
    }
    sampled.push_back(pool_ids[picked]);
    remaining -= pool_weights[picked];
    pool_ids.erase(pool_ids.begin() + static_cast<std::ptrdiff_t>(picked));
    pool_weights.erase(pool_weights.begin() + static_cast<std::ptrdiff_t>(picked));
  }
  return sampled;
}

}  // namespace tagroute
