#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace uechecker::train {

/// Binary confusion counts; class 1 is positive. Ratios with a zero
/// denominator are 0.
struct Metrics {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  double accuracy() const;
  double precision() const;
  double recall() const;
  double f1() const;

  /// Counts are additive, so shards can be merged in any order.
  Metrics& operator+=(const Metrics& o);
  bool operator==(const Metrics&) const = default;
};

Metrics confusion(const std::vector<int>& predicted, const std::vector<int>& labels);

/// F1 from a precision/recall pair, 0 when both are 0.
double f1_score(double precision, double recall);

/// One-line JSON object with the counts and the four ratios.
std::string metrics_json(const Metrics& m);

}  // namespace uechecker::train
