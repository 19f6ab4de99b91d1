#include "uechecker/cli/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "uechecker/autograd/rng.hpp"
#include "uechecker/frontend/dot.hpp"
#include "uechecker/ingest/manifest.hpp"

namespace uechecker::cli {

void SyntheticSpec::validate() const {
  if (count < 1) throw std::invalid_argument("synthetic count must be >= 1");
  if (min_nodes < 3 || max_nodes < min_nodes) throw std::invalid_argument("synthetic node range must satisfy 3 <= min <= max");
  if (!(external_prob >= 0 && external_prob <= 1)) throw std::invalid_argument("external_prob must be in [0, 1]");
  if (!(motif_prob >= 0 && motif_prob <= 1)) throw std::invalid_argument("motif_prob must be in [0, 1]");
}

namespace {

constexpr std::array<const char*, 6> kContracts = {"RewardPool", "Vault", "Staking", "Router", "Farm", "Treasury"};
constexpr std::array<const char*, 16> kFunctions = {
    "deposit", "withdraw", "claim",   "harvest", "stake",      "unstake", "swap",    "mint",
    "burn",    "update",   "getReward", "notify", "safeTransfer", "sync", "execute", "setOwner"};
constexpr std::array<const char*, 6> kReceivers = {"rewardToken", "token", "lpToken", "router", "pair", "vault"};
constexpr std::array<const char*, 6> kMethods = {"transfer", "transferFrom", "approve", "call", "send", "swap"};

template <std::size_t N>
const char* pick(const std::array<const char*, N>& pool, CounterRng& rng) {
  return pool[rng.below(N)];
}

enum class Role { kPlain, kChecked, kUnchecked, kDecoy };

frontend::CallGraph make_graph(int label, std::size_t n, const SyntheticSpec& spec, CounterRng& rng) {
  using frontend::CallKind;
  // Node budget per role: plain 1, unchecked source 2, checked source or
  // decoy 3/2 (function + leaf + check / function + check).
  std::vector<Role> roles;
  std::size_t remaining = n;
  if (label == 1) {
    roles.push_back(Role::kUnchecked);
    remaining -= 2;
  } else if (remaining >= 3) {
    roles.push_back(Role::kChecked);
    remaining -= 3;
  }
  while (remaining > 0) {
    const double u = rng.uniform();
    if (u < spec.external_prob && remaining >= 3) {
      roles.push_back(Role::kChecked);
      remaining -= 3;
    } else if (label == 1 && u < spec.external_prob * 1.2 && remaining >= 2) {
      roles.push_back(Role::kUnchecked);
      remaining -= 2;
    } else if (u > 0.85 && remaining >= 2) {
      roles.push_back(Role::kDecoy);
      remaining -= 2;
    } else {
      roles.push_back(Role::kPlain);
      remaining -= 1;
    }
  }
  // Seeded permutation so the roles do not follow node-id order.
  for (std::size_t i = roles.size(); i > 1; --i) std::swap(roles[i - 1], roles[rng.below(i)]);

  const std::string contract = pick(kContracts, rng);
  frontend::CallGraph g;
  std::vector<std::string> fn_ids;
  for (std::size_t i = 0; i < roles.size(); ++i) {
    const std::string name = pick(kFunctions, rng);
    char suffix[32];
    std::snprintf(suffix, sizeof suffix, "_%02zu", i);
    fn_ids.push_back(contract + "." + name + suffix);
    g.nodes.push_back({fn_ids.back(), name});
  }
  for (std::size_t i = 1; i < fn_ids.size(); ++i) {
    g.edges.push_back({fn_ids[rng.below(i)], fn_ids[i], CallKind::kInternal});
  }
  for (std::size_t i = 0; i < fn_ids.size() && fn_ids.size() > 1; ++i) {
    if (rng.uniform() < 0.3) {
      std::size_t j = rng.below(fn_ids.size() - 1);
      if (j >= i) ++j;
      g.edges.push_back({fn_ids[i], fn_ids[j], CallKind::kInternal});
    }
  }
  for (std::size_t i = 0; i < roles.size(); ++i) {
    const Role r = roles[i];
    if (r == Role::kChecked || r == Role::kUnchecked) {
      // Leaves are distinct per source so the node count stays exact.
      std::string method, leaf;
      do {
        method = pick(kMethods, rng);
        leaf = std::string(pick(kReceivers, rng)) + "." + method;
      } while (std::any_of(g.nodes.begin(), g.nodes.end(), [&](const auto& nd) { return nd.id == leaf; }));
      g.nodes.push_back({leaf, method});
      g.edges.push_back({fn_ids[i], leaf, CallKind::kExternal});
    }
    if (r == Role::kChecked || r == Role::kDecoy) {
      const std::string check = pick(kCheckLabels, rng);
      const std::string id = fn_ids[i] + "." + check;
      g.nodes.push_back({id, check});
      g.edges.push_back({fn_ids[i], id, CallKind::kInternal});
    }
  }
  g.canonicalize();
  return g;
}

}  // namespace

std::vector<SyntheticGraph> generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::vector<int> labels(spec.count, 0);
  CounterRng label_rng(spec.seed, 0x6c61626cULL);
  if (spec.exact_balance) {
    const auto pos = static_cast<std::size_t>(std::llround(static_cast<double>(spec.count) * spec.motif_prob));
    std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(pos), 1);
    for (std::size_t i = labels.size(); i > 1; --i) std::swap(labels[i - 1], labels[label_rng.below(i)]);
  } else {
    for (auto& y : labels) y = label_rng.uniform() < spec.motif_prob ? 1 : 0;
  }
  std::vector<SyntheticGraph> out;
  out.reserve(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i) {
    CounterRng rng(spec.seed, 0x67726170ULL + i);
    const std::size_t n = spec.min_nodes + rng.below(spec.max_nodes - spec.min_nodes + 1);
    out.push_back({make_graph(labels[i], n, spec, rng), labels[i]});
  }
  return out;
}

std::string write_synthetic_corpus(const std::vector<SyntheticGraph>& corpus, const std::string& out_dir) {
  std::vector<ingest::ManifestRow> rows;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "graph_%04zu.dot", i);
    ingest::write_text_file(out_dir + "/" + name, frontend::emit_dot(corpus[i].graph));
    rows.push_back({name, corpus[i].label, i + 1});
  }
  const std::string manifest = out_dir + "/manifest.jsonl";
  ingest::write_manifest(manifest, rows);
  return manifest;
}

}  // namespace uechecker::cli
