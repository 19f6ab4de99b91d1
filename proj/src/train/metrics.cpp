#include "uechecker/train/metrics.hpp"

#include <stdexcept>

#include "json.hpp"

namespace uechecker::train {

namespace {
double ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}
}  // namespace

double Metrics::accuracy() const { return ratio(tp + tn, total()); }
double Metrics::precision() const { return ratio(tp, tp + fp); }
double Metrics::recall() const { return ratio(tp, tp + fn); }
double Metrics::f1() const { return f1_score(precision(), recall()); }

double f1_score(double precision, double recall) {
  const double s = precision + recall;
  return s == 0 ? 0.0 : 2 * precision * recall / s;
}

Metrics& Metrics::operator+=(const Metrics& o) {
  tp += o.tp;
  fp += o.fp;
  tn += o.tn;
  fn += o.fn;
  return *this;
}

Metrics confusion(const std::vector<int>& predicted, const std::vector<int>& labels) {
  if (predicted.size() != labels.size()) throw std::invalid_argument("confusion: size mismatch");
  Metrics m;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool p = predicted[i] == 1, y = labels[i] == 1;
    if (p && y) ++m.tp;
    else if (p) ++m.fp;
    else if (y) ++m.fn;
    else ++m.tn;
  }
  return m;
}

std::string metrics_json(const Metrics& m) {
  nlohmann::ordered_json j;
  j["tp"] = m.tp;
  j["fp"] = m.fp;
  j["tn"] = m.tn;
  j["fn"] = m.fn;
  j["accuracy"] = m.accuracy();
  j["precision"] = m.precision();
  j["recall"] = m.recall();
  j["f1"] = m.f1();
  return j.dump();
}

}  // namespace uechecker::train
