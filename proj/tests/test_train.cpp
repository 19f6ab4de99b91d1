#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "json.hpp"
#include "uechecker/autograd/checkpoint.hpp"
#include "uechecker/autograd/grad_check.hpp"
#include "uechecker/autograd/rng.hpp"
#include "uechecker/train/losses.hpp"
#include "uechecker/train/metrics.hpp"
#include "uechecker/train/trainer.hpp"

using namespace uechecker;
using namespace uechecker::train;
using frontend::CallGraph;
using frontend::CallKind;
using model::Ablation;
using model::ModelConfig;
using TD = ag::Tensor<double>;

namespace {

TD rnd(ag::Shape s, std::uint64_t seed, double lo, double hi, bool grad = true) {
  CounterRng rng(seed, 5);
  std::vector<double> v(ag::shape_numel(s));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return TD::from(std::move(s), std::move(v), grad);
}

std::vector<int> rnd_labels(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<int> y(n);
  for (auto& v : y) v = static_cast<int>(rng() % 2);
  return y;
}

double naive_ce(const std::vector<double>& z, int y) {
  double s = 0;
  for (double v : z) s += std::exp(v);
  return -std::log(std::exp(z[static_cast<std::size_t>(y)]) / s);
}

double naive_bce(double z, int y) {
  const double p = 1 / (1 + std::exp(-z));
  return -(y * std::log(p) + (1 - y) * std::log(1 - p));
}

// Small graphs whose label is the presence of an external edge.
void toy_set(std::vector<CallGraph>& graphs, std::vector<int>& labels, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const char* fn[] = {"deposit", "withdraw", "claim", "stake", "update"};
  for (std::size_t g = 0; g < count; ++g) {
    CallGraph cg;
    const std::size_t n = 3 + rng() % 4;
    for (std::size_t i = 0; i < n; ++i) cg.nodes.push_back({"C.f" + std::to_string(i), fn[rng() % 5]});
    for (std::size_t i = 1; i < n; ++i) {
      cg.edges.push_back({cg.nodes[rng() % i].id, cg.nodes[i].id, CallKind::kInternal});
    }
    const int y = static_cast<int>(g % 2);
    cg.nodes.push_back({"token.transfer", "transfer"});
    const auto& src = cg.nodes[rng() % n].id;
    cg.edges.push_back({src, "token.transfer", y ? CallKind::kExternal : CallKind::kInternal});
    cg.canonicalize();
    graphs.push_back(std::move(cg));
    labels.push_back(y);
  }
}

ModelConfig tiny_cfg(Ablation a = Ablation::kFull) {
  ModelConfig c;
  c.embedding_dim = 8;
  c.hidden = 16;
  c.edge_hidden = 8;
  c.heads = 2;
  c.head_dim = 4;
  c.ffn_mult = 2;
  c.clusters = 4;
  c.dropout = 0.1;
  c.batch_size = 4;
  c.learning_rate = 5e-3;
  c.epochs = 10;
  c.seed = 3;
  c.ablation = a;
  return c;
}

}  // namespace

// ---------------------------------------------------------------- losses

TEST(CrossEntropy, ClosedFormsAndSaturation) {
  EXPECT_NEAR(cross_entropy_loss(TD::from({1, 2}, {0, 0}), {1}).item(), std::log(2.0), 1e-15);
  EXPECT_LT(cross_entropy_loss(TD::from({1, 2}, {30, -30}), {0}).item(), 1e-12);
  EXPECT_NEAR(cross_entropy_loss(TD::from({1, 2}, {30, -30}), {1}).item(), 60.0, 1e-9);
  EXPECT_TRUE(std::isfinite(cross_entropy_loss(TD::from({1, 2}, {1e4, -1e4}), {1}).item()));
}

TEST(CrossEntropy, MatchesNaiveOracle) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto z = rnd({8, 2}, seed, -10, 10, false);
    const auto y = rnd_labels(8, seed);
    double want = 0;
    for (std::size_t b = 0; b < 8; ++b) want += naive_ce({z.at({b, 0}), z.at({b, 1})}, y[b]);
    EXPECT_NEAR(cross_entropy_loss(z, y).item(), want / 8, 1e-10);
  }
}

TEST(CrossEntropy, WeightedMeanNormalizesByTotalWeight) {
  const auto z = rnd({5, 2}, 1, -3, 3, false);
  const std::vector<int> y = {0, 1, 1, 0, 1};
  const std::vector<double> w = {0.25, 2.0};
  double num = 0, den = 0;
  for (std::size_t b = 0; b < 5; ++b) {
    num += w[y[b]] * naive_ce({z.at({b, 0}), z.at({b, 1})}, y[b]);
    den += w[y[b]];
  }
  EXPECT_NEAR(cross_entropy_loss(z, y, w).item(), num / den, 1e-12);
  EXPECT_NEAR(cross_entropy_loss(z, y, {1.0, 1.0}).item(), cross_entropy_loss(z, y).item(), 1e-15);
}

TEST(BceLogits, ClosedFormsAndOracle) {
  EXPECT_NEAR(bce_logits_loss(TD::from({1, 1}, {0}), {0}).item(), std::log(2.0), 1e-15);
  EXPECT_LT(bce_logits_loss(TD::from({1, 1}, {30}), {1}).item(), 1e-12);
  EXPECT_TRUE(std::isfinite(bce_logits_loss(TD::from({2}, {800, -800}), {0, 1}).item()));
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto z = rnd({8, 1}, seed, -10, 10, false);
    const auto y = rnd_labels(8, seed + 7);
    double want = 0;
    for (std::size_t b = 0; b < 8; ++b) want += naive_bce(z.data()[b], y[b]);
    EXPECT_NEAR(bce_logits_loss(z, y).item(), want / 8, 1e-10);
  }
}

TEST(Losses, GradientsMatchFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto z2 = rnd({6, 2}, seed, -4, 4);
    auto z1 = rnd({6, 1}, seed + 20, -4, 4);
    const auto y = rnd_labels(6, seed);
    for (const std::vector<double>& w : {std::vector<double>{}, std::vector<double>{0.7, 1.9}}) {
      auto r = ag::grad_check([&] { return cross_entropy_loss(z2, y, w); }, {z2});
      EXPECT_LT(r.max_rel_error, 1e-4) << "cross_entropy seed " << seed;
      r = ag::grad_check([&] { return bce_logits_loss(z1, y, w); }, {z1});
      EXPECT_LT(r.max_rel_error, 1e-4) << "bce seed " << seed;
    }
  }
}

TEST(Losses, RejectBadLabels) {
  EXPECT_THROW(cross_entropy_loss(TD::from({1, 2}, {0, 0}), {2}), std::invalid_argument);
  EXPECT_THROW(bce_logits_loss(TD::from({1, 1}, {0}), {-1}), std::invalid_argument);
  EXPECT_THROW(cross_entropy_loss(TD::from({2, 2}, {0, 0, 0, 0}), {0}), ag::ShapeMismatch);
}

TEST(Losses, InverseFrequencyWeights) {
  EXPECT_EQ(inverse_frequency_weights({0, 0, 0, 1}), (std::vector<double>{4.0 / 6.0, 2.0}));
  EXPECT_EQ(inverse_frequency_weights({1, 1}), (std::vector<double>{0.0, 0.5}));
}

// ---------------------------------------------------------------- metrics

TEST(Metrics, WorkedExample) {
  Metrics m;
  m.tp = 9030;
  m.fp = 970;
  m.fn = 1405;
  EXPECT_NEAR(m.precision(), 0.9030, 5e-5);
  EXPECT_NEAR(m.recall(), 0.8653, 1e-4);  // 0.86536
  EXPECT_NEAR(m.f1(), 0.8838, 5e-5);
  EXPECT_DOUBLE_EQ(m.f1(), 18060.0 / 20435.0);
  // The rounded pair gives 0.88375, still far from 0.8712.
  EXPECT_NEAR(f1_score(0.9030, 0.8653), 0.8838, 1e-4);
  EXPECT_GT(std::abs(f1_score(0.9030, 0.8653) - 0.8712), 0.01);
}

TEST(Metrics, TrivialPredictors) {
  const std::vector<int> y = {0, 1, 0, 1, 1, 0};
  const auto perfect = confusion(y, y);
  EXPECT_EQ(perfect.accuracy(), 1.0);
  EXPECT_EQ(perfect.precision(), 1.0);
  EXPECT_EQ(perfect.recall(), 1.0);
  EXPECT_EQ(perfect.f1(), 1.0);
  const auto neg = confusion(std::vector<int>(6, 0), y);
  EXPECT_EQ(neg.precision(), 0.0);
  EXPECT_EQ(neg.recall(), 0.0);
  EXPECT_EQ(neg.f1(), 0.0);
  EXPECT_EQ(neg.accuracy(), 0.5);
  EXPECT_EQ(Metrics{}.accuracy(), 0.0);
}

TEST(Metrics, BruteForceCounterAndAdditivity) {
  std::mt19937_64 rng(42);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = rng() % 60;
    std::vector<int> p(n), y(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = rng() % 2, y[i] = rng() % 2;
    std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < n; ++i) {
      tp += p[i] && y[i];
      fp += p[i] && !y[i];
      tn += !p[i] && !y[i];
      fn += !p[i] && y[i];
    }
    const auto m = confusion(p, y);
    EXPECT_EQ(m.tp, tp);
    EXPECT_EQ(m.fp, fp);
    EXPECT_EQ(m.tn, tn);
    EXPECT_EQ(m.fn, fn);
    const double P = tp + fp ? double(tp) / double(tp + fp) : 0, R = tp + fn ? double(tp) / double(tp + fn) : 0;
    EXPECT_EQ(m.precision(), P);
    EXPECT_EQ(m.recall(), R);
    EXPECT_EQ(m.f1(), P + R > 0 ? 2 * P * R / (P + R) : 0.0);
    EXPECT_EQ(m.accuracy(), n ? double(tp + tn) / double(n) : 0.0);
    for (double r : {m.accuracy(), m.precision(), m.recall(), m.f1()}) {
      EXPECT_GE(r, 0.0);
      EXPECT_LE(r, 1.0);
    }
    // Shards merge in any order.
    const std::size_t cut = n ? rng() % n : 0;
    auto a = confusion({p.begin(), p.begin() + cut}, {y.begin(), y.begin() + cut});
    const auto b = confusion({p.begin() + cut, p.end()}, {y.begin() + cut, y.end()});
    auto c = b;
    c += a;
    a += b;
    EXPECT_EQ(a, m);
    EXPECT_EQ(c, m);
  }
  EXPECT_THROW(confusion({1}, {}), std::invalid_argument);
}

TEST(Metrics, JsonCarriesCountsAndRatios) {
  const auto j = nlohmann::json::parse(metrics_json(confusion({1, 0, 1}, {1, 1, 0})));
  EXPECT_EQ(j["tp"], 1);
  EXPECT_EQ(j["fp"], 1);
  EXPECT_EQ(j["fn"], 1);
  EXPECT_EQ(j["tn"], 0);
  EXPECT_DOUBLE_EQ(j["f1"].get<double>(), 0.5);
}

// ---------------------------------------------------------------- split

TEST(Split, StratifiedSeededAndDisjoint) {
  std::vector<int> y(50, 0);
  std::fill(y.begin(), y.begin() + 20, 1);
  const auto s = stratified_split(y, 0.2, 9);
  EXPECT_EQ(s.val.size(), 10u);
  EXPECT_EQ(std::count_if(s.val.begin(), s.val.end(), [&](std::size_t i) { return y[i] == 1; }), 4);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  for (auto i : s.val) EXPECT_TRUE(all.insert(i).second);
  EXPECT_EQ(all.size(), 50u);
  EXPECT_TRUE(std::is_sorted(s.val.begin(), s.val.end()));
  EXPECT_EQ(stratified_split(y, 0.2, 9).val, s.val);
  EXPECT_NE(stratified_split(y, 0.2, 10).val, s.val);
  EXPECT_TRUE(stratified_split(y, 0.0, 9).val.empty());
  EXPECT_THROW(stratified_split(y, 1.0, 9), std::invalid_argument);
}

// ---------------------------------------------------------------- training

TEST(Train, EmptyDatasetThrows) {
  EXPECT_THROW(prepare(tiny_cfg(), {}, {}), EmptyDataset);
  EXPECT_THROW(train::train(tiny_cfg(), ingest::LabelVocab{}, {}), EmptyDataset);
}

TEST(Train, ZeroLearningRateLeavesWeights) {
  std::vector<CallGraph> g;
  std::vector<int> y;
  toy_set(g, y, 12, 1);
  for (auto a : {Ablation::kEdgeGcn, Ablation::kFull}) {
    auto cfg = tiny_cfg(a);
    cfg.learning_rate = 0;
    cfg.epochs = 3;
    const auto prep = prepare(cfg, g, y);
    const auto r = train::train(cfg, prep.vocab, prep.samples);
    model::UECheckerModel<float> init(cfg, prep.vocab);
    auto best = model::UECheckerModel<float>::from_checkpoint(r.best);
    auto last = model::UECheckerModel<float>::from_checkpoint(r.last);
    for (const auto& p : init.parameters().items()) {
      const auto& b = last.parameters().at(p.name).data();
      // Centers are set from data on the first training forward, then only
      // the optimizer moves them.
      const auto& a0 = (p.name == "cluster.centers" && cfg.uses_cluster() ? best.parameters().at(p.name) : p.tensor).data();
      EXPECT_TRUE(std::equal(a0.begin(), a0.end(), b.begin())) << p.name;
    }
    EXPECT_EQ(r.log.size(), 3u);
  }
}

TEST(Train, SingleClassWarnsAndProceeds) {
  std::vector<CallGraph> g;
  std::vector<int> y;
  toy_set(g, y, 6, 2);
  std::fill(y.begin(), y.end(), 0);
  auto cfg = tiny_cfg();
  cfg.epochs = 1;
  const auto prep = prepare(cfg, g, y);
  const auto r = train::train(cfg, prep.vocab, prep.samples);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_NE(r.warnings[0].find("single class"), std::string::npos);
  EXPECT_EQ(r.log.size(), 1u);
}

TEST(Train, ZeroEpochsKeepsInitialWeights) {
  std::vector<CallGraph> g;
  std::vector<int> y;
  toy_set(g, y, 6, 3);
  auto cfg = tiny_cfg();
  cfg.epochs = 0;
  const auto prep = prepare(cfg, g, y);
  const auto r = train::train(cfg, prep.vocab, prep.samples);
  EXPECT_TRUE(r.log.empty());
  EXPECT_EQ(r.best_epoch, 0u);
  model::UECheckerModel<float> init(cfg, prep.vocab);
  auto opt = ag::make_optimizer_state(init.parameters(), ag::AdamWConfig{cfg.learning_rate, cfg.beta1, cfg.beta2,
                                                                            cfg.adam_eps, cfg.weight_decay});
  EXPECT_EQ(ag::encode_checkpoint(r.best), ag::encode_checkpoint(init.to_checkpoint(&opt)));
}

TEST(Train, OverfitsToySetWithinBudget) {
  std::vector<CallGraph> g;
  std::vector<int> y;
  toy_set(g, y, 16, 4);
  auto cfg = tiny_cfg();
  cfg.val_fraction = 0.125;
  cfg.epochs = 200;
  cfg.dropout = 0;
  cfg.batch_size = 16;  // one full batch per epoch
  cfg.learning_rate = 2e-3;
  const auto prep = prepare(cfg, g, y);
  const auto r = train::train(cfg, prep.vocab, prep.samples);
  auto m = model::UECheckerModel<float>::from_checkpoint(r.last);
  EXPECT_EQ(evaluate(m, prep.samples, &r.split.train).accuracy(), 1.0);

  // Mean loss over consecutive 10-epoch windows never rises.
  ASSERT_EQ(r.log.size(), 200u);
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t w = 0; w < 20; ++w) {
    double s = 0;
    for (std::size_t e = 0; e < 10; ++e) s += r.log[w * 10 + e].train_loss;
    EXPECT_LE(s / 10, prev) << "window " << w;
    prev = s / 10;
  }
}

TEST(Train, DeterministicLogsAndCheckpoints) {
  std::vector<CallGraph> g;
  std::vector<int> y;
  toy_set(g, y, 14, 5);
  const auto cfg = tiny_cfg();
  const auto prep = prepare(cfg, g, y);
  const auto a = train::train(cfg, prep.vocab, prep.samples), b = train::train(cfg, prep.vocab, prep.samples);
  ASSERT_EQ(a.log.size(), b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) EXPECT_EQ(a.log[i].to_json(), b.log[i].to_json());
  EXPECT_EQ(ag::encode_checkpoint(a.best), ag::encode_checkpoint(b.best));
  EXPECT_EQ(ag::encode_checkpoint(a.last), ag::encode_checkpoint(b.last));
  auto other = cfg;
  other.seed = 4;
  EXPECT_NE(ag::encode_checkpoint(train::train(other, prep.vocab, prep.samples).last), ag::encode_checkpoint(a.last));
}

TEST(Train, BestCheckpointMatchesBestEpochAndLogFields) {
  std::vector<CallGraph> g;
  std::vector<int> y;
  toy_set(g, y, 20, 6);
  auto cfg = tiny_cfg();
  cfg.epochs = 8;
  const auto prep = prepare(cfg, g, y);
  std::vector<std::string> seen;
  const auto r = train::train(cfg, prep.vocab, prep.samples, [&](const EpochRecord& e) { seen.push_back(e.to_json()); });
  ASSERT_EQ(seen.size(), r.log.size());
  double best = -1;
  std::size_t best_epoch = 0;
  for (const auto& e : r.log) {
    if (e.val.f1() > best) best = e.val.f1(), best_epoch = e.epoch;
  }
  EXPECT_EQ(r.best_epoch, best_epoch);
  EXPECT_EQ(r.best_val, r.log[best_epoch - 1].val);
  auto m = model::UECheckerModel<float>::from_checkpoint(r.best);
  EXPECT_EQ(evaluate(m, prep.samples, &r.split.val), r.best_val);
  const auto j = nlohmann::json::parse(seen.front());
  for (const char* k : {"epoch", "train_loss", "val_acc", "val_precision", "val_recall", "val_f1"}) {
    EXPECT_TRUE(j.contains(k)) << k;
  }
}

TEST(Train, PatienceStopsEarly) {
  std::vector<CallGraph> g;
  std::vector<int> y;
  toy_set(g, y, 12, 7);
  auto cfg = tiny_cfg();
  cfg.epochs = 50;
  cfg.patience = 2;
  cfg.learning_rate = 0;
  const auto prep = prepare(cfg, g, y);
  EXPECT_EQ(train::train(cfg, prep.vocab, prep.samples).log.size(), 3u);
}

TEST(Train, ClassWeightsChangeTheTrajectory) {
  std::vector<CallGraph> g;
  std::vector<int> y;
  toy_set(g, y, 12, 8);
  y[0] = y[2] = 1;  // imbalance the classes
  auto cfg = tiny_cfg();
  cfg.epochs = 2;
  const auto prep = prepare(cfg, g, y);
  auto w = cfg;
  w.class_weights = true;
  EXPECT_NE(train::train(cfg, prep.vocab, prep.samples).log.back().train_loss,
            train::train(w, prep.vocab, prep.samples).log.back().train_loss);
}

TEST(Evaluate, PureAndCheckpointOverloadAgrees) {
  std::vector<CallGraph> g;
  std::vector<int> y;
  toy_set(g, y, 10, 9);
  auto cfg = tiny_cfg();
  cfg.epochs = 3;
  const auto prep = prepare(cfg, g, y);
  const auto r = train::train(cfg, prep.vocab, prep.samples);
  auto m = model::UECheckerModel<float>::from_checkpoint(r.last);
  std::vector<double> p1, p2;
  const auto a = evaluate(m, prep.samples, nullptr, &p1), b = evaluate(m, prep.samples, nullptr, &p2);
  EXPECT_EQ(a, b);
  EXPECT_EQ(p1, p2);
  EXPECT_EQ(a.total(), 10u);
  for (double p : p1) {
    EXPECT_GE(p, 0.0);
    EXPECT_LE(p, 1.0);
  }
  EXPECT_EQ(evaluate(r.last, g, y), a);
  EXPECT_EQ(evaluate(r.last, g, y), evaluate(r.last, g, y));
}

TEST(Evaluate, BceHeadThresholdsAtHalf) {
  std::vector<CallGraph> g;
  std::vector<int> y;
  toy_set(g, y, 10, 10);
  auto cfg = tiny_cfg();
  cfg.loss = model::LossKind::kBceLogits;
  cfg.epochs = 2;
  const auto prep = prepare(cfg, g, y);
  const auto r = train::train(cfg, prep.vocab, prep.samples);
  auto m = model::UECheckerModel<float>::from_checkpoint(r.last);
  std::vector<double> p;
  const auto met = evaluate(m, prep.samples, nullptr, &p);
  std::vector<int> pred;
  for (double v : p) pred.push_back(v > 0.5 ? 1 : 0);
  EXPECT_EQ(confusion(pred, y), met);
}

// ---------------------------------------------------------------- ablation

TEST(Ablation, RowsShareSplitsAndFullMatchesPlainRun) {
  std::vector<CallGraph> g;
  std::vector<int> y;
  toy_set(g, y, 12, 11);
  auto cfg = tiny_cfg();
  cfg.epochs = 2;
  const auto rows = run_ablation(cfg, g, y, {1, 2});
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].ablation, Ablation::kGcnOnly);
  EXPECT_EQ(rows[0].edge_predict_calls, 0u);
  for (std::size_t i = 1; i < 4; ++i) EXPECT_GT(rows[i].edge_predict_calls, 0u);
  for (const auto& r : rows) EXPECT_EQ(r.per_seed.size(), 2u);

  auto plain = cfg;
  plain.seed = 2;
  const auto prep = prepare(plain, g, y);
  EXPECT_EQ(train::train(plain, prep.vocab, prep.samples).best_val, rows[3].per_seed[1]);

  const auto report = ablation_report(rows);
  EXPECT_EQ(std::count(report.begin(), report.end(), '\n'), 4);
  const auto first = nlohmann::json::parse(report.substr(0, report.find('\n')));
  EXPECT_EQ(first["structure"], "gcn_only");
  EXPECT_EQ(first["edge_predict_calls"], 0);
}
