#pragma once
// Test-side generators and independent oracles. Nothing here calls into the
// code under test for the value it is supposed to check.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "sirfp/allocator.hpp"
#include "sirfp/topology.hpp"
#include "sirfp/types.hpp"

namespace testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo = 0.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::uint32_t uniform_int(Rng& rng, std::uint32_t lo, std::uint32_t hi) {
  return std::uniform_int_distribution<std::uint32_t>(lo, hi)(rng);
}

/// Random symmetric, zero-diagonal weights in [lo, hi).
inline std::vector<double> random_symmetric(Rng& rng, std::uint32_t n, double lo = 0.0,
                                            double hi = 1.0) {
  std::vector<double> w(std::size_t{n} * n, 0.0);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = i + 1; j < n; ++j) {
      w[std::size_t{i} * n + j] = w[std::size_t{j} * n + i] = uniform(rng, lo, hi);
    }
  }
  return w;
}

inline sirfp::EdgeWeightMatrix random_graph(Rng& rng, std::uint32_t n, double lo = 0.0,
                                            double hi = 1.0) {
  return sirfp::EdgeWeightMatrix("g", n, random_symmetric(rng, n, lo, hi), 1, 0.99);
}

/// Random probability vector. Some draws get exact zeros.
inline std::vector<double> random_distribution(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  const bool sparse = uniform(rng) < 0.3;
  for (auto& x : v) x = (sparse && uniform(rng) < 0.5) ? 0.0 : -std::log(uniform(rng, 1e-300, 1.0));
  double s = std::accumulate(v.begin(), v.end(), 0.0);
  if (s == 0.0) {
    v[0] = 1.0;
    s = 1.0;
  }
  for (auto& x : v) x /= s;
  return v;
}

// ---- redundancy oracle (long double, textbook formulas) -------------------

inline long double kl_oracle(const std::vector<double>& p, const std::vector<double>& q) {
  long double s = 0.0L;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] > 0) s += static_cast<long double>(p[k]) * std::log(static_cast<long double>(p[k]) / q[k]);
  }
  return s;
}

inline long double js_divergence_oracle(const std::vector<double>& p, const std::vector<double>& q) {
  long double s = 0.0L;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const long double m = (static_cast<long double>(p[k]) + q[k]) / 2;
    if (p[k] > 0) s += 0.5L * p[k] * std::log(p[k] / m);
    if (q[k] > 0) s += 0.5L * q[k] * std::log(q[k] / m);
  }
  return s;
}

inline std::vector<double> normalize_oracle(const std::vector<double>& x, double eps = 1e-8) {
  std::vector<double> out(x.size());
  long double total = 0.0L;
  for (double v : x) total += std::max(v, 0.0) + eps;
  for (std::size_t k = 0; k < x.size(); ++k) out[k] = static_cast<double>((std::max(x[k], 0.0) + eps) / total);
  return out;
}

// ---- clique oracle --------------------------------------------------------

/// Double-sum objective, summed over ordered pairs in long double.
inline double clique_weight_oracle(const sirfp::EdgeWeightMatrix& m,
                                   const std::vector<sirfp::ChannelIndex>& kept) {
  long double s = 0.0L;
  for (auto i : kept) {
    for (auto j : kept) {
      if (i != j) s += m(i, j);
    }
  }
  return static_cast<double>(s);
}

/// Best subset of size `keep` by bitmask enumeration.
inline double best_clique_weight(const sirfp::EdgeWeightMatrix& m, std::uint32_t keep) {
  const std::uint32_t n = m.size();
  double best = -std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::uint32_t>(std::popcount(mask)) != keep) continue;
    std::vector<sirfp::ChannelIndex> kept;
    for (std::uint32_t i = 0; i < n; ++i) {
      if (mask >> i & 1u) kept.push_back(i);
    }
    best = std::max(best, clique_weight_oracle(m, kept));
  }
  return best;
}

// ---- FLOPs oracle ---------------------------------------------------------

/// Cost of a topology given keep counts per layer, straight from the layer
/// fields and links (the first link into a layer decides its input width).
inline double flops_oracle(const sirfp::LayerTopology& t, const std::vector<std::uint32_t>& keep) {
  const auto& layers = t.layers();
  double total = 0.0;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& L = layers[l];
    double in = L.in_channels;
    for (const auto& link : t.links()) {
      if (link.consumer == L.id) {
        in = keep[*t.find(link.producer)];
        break;
      }
    }
    total += static_cast<double>(keep[l]) * in * L.kernel_h * L.kernel_w * L.out_h * L.out_w;
  }
  return total;
}

// ---- topology generator ---------------------------------------------------

struct RandomNet {
  sirfp::LayerTopology topology;
  std::vector<sirfp::ImportanceTrace> traces;
};

/// Random DAG of 1..5 layers with at most `max_channels` output channels in
/// total. Residual-style couplings appear by giving two producers of equal
/// width a shared consumer. Some draws pin the last layer as a non-prunable
/// linear head. Traces use a small score alphabet so keys tie often.
inline RandomNet random_net(Rng& rng, std::uint32_t max_channels = 64) {
  using namespace sirfp;
  std::vector<LayerSpec> layers;
  std::vector<Link> links;
  const std::uint32_t count = uniform_int(rng, 1, 5);
  std::uint32_t budget = max_channels;
  std::vector<std::size_t> producer;
  for (std::uint32_t l = 0; l < count && budget >= 2; ++l) {
    LayerSpec s;
    s.id = "layer" + std::to_string(l);
    const std::uint32_t remaining = count - l - 1;
    const std::uint32_t cap = std::max<std::uint32_t>(2, std::min<std::uint32_t>(16, budget - 2 * remaining));
    if (l > 0 && uniform(rng) < 0.3) {
      s.out_channels = std::min(layers[uniform_int(rng, 0, l - 1)].out_channels, cap);
    } else {
      s.out_channels = uniform_int(rng, 2, cap);
    }
    budget -= std::min(budget, s.out_channels);
    const bool conv = uniform(rng) < 0.8;
    s.kind = conv ? LayerKind::Conv : LayerKind::Linear;
    s.kernel_h = s.kernel_w = conv ? (uniform(rng) < 0.5 ? 3 : 1) : 1;
    s.out_h = s.out_w = conv ? uniform_int(rng, 1, 6) : 1;
    if (l == 0 || uniform(rng) < 0.15) {
      s.in_channels = uniform_int(rng, 1, 4);
      producer.push_back(SIZE_MAX);
    } else {
      const std::size_t p = uniform_int(rng, 0, l - 1);
      s.in_channels = layers[p].out_channels;
      links.push_back({layers[p].id, s.id});
      producer.push_back(p);
    }
    layers.push_back(s);
  }
  // Residual joins: another producer of equal width feeding the same consumer.
  for (std::size_t c = 1; c < layers.size(); ++c) {
    if (producer[c] == SIZE_MAX || uniform(rng) >= 0.4) continue;
    for (std::size_t b = 0; b < c; ++b) {
      if (b != producer[c] && layers[b].out_channels == layers[producer[c]].out_channels) {
        links.push_back({layers[b].id, layers[c].id});
        break;
      }
    }
  }
  if (layers.size() > 1 && uniform(rng) < 0.25) layers.back().prunable = false;
  LayerTopology topology(layers, links);

  RandomNet net{topology, {}};
  // One alive set per coupling group; some groups start partially pruned.
  std::vector<std::vector<ChannelIndex>> alive(topology.group_count());
  for (std::size_t g = 0; g < topology.group_count(); ++g) {
    const std::uint32_t width = topology.group_channels(g);
    std::vector<ChannelIndex> all(width);
    std::iota(all.begin(), all.end(), 0u);
    std::shuffle(all.begin(), all.end(), rng);
    std::uint32_t n = width;
    if (uniform(rng) < 0.2 && width > 3) n = uniform_int(rng, 2, width);
    all.resize(n);
    alive[g] = std::move(all);
  }
  for (std::size_t l = 0; l < topology.layers().size(); ++l) {
    const std::size_t g = topology.group_of(l);
    if (!topology.group_prunable(g)) continue;
    auto order = alive[g];
    std::shuffle(order.begin(), order.end(), rng);
    ImportanceTrace t;
    t.layer_id = topology.layers()[l].id;
    t.channels = topology.layers()[l].out_channels;
    t.survivor = order.back();
    order.pop_back();
    for (auto c : order) t.order.push_back({c, static_cast<double>(uniform_int(rng, 0, 6)) * 0.25});
    net.traces.push_back(std::move(t));
  }
  return net;
}

// ---- exhaustive allocator oracle -------------------------------------------

struct ScanResult {
  bool feasible = false;
  std::vector<std::uint32_t> keep;  // per layer
  double reduction = 0.0;
  // Smallest observed key s such that cutting every channel keyed <= s
  // meets the target, and how many channels lie strictly below / at or below it.
  double threshold = std::numeric_limits<double>::quiet_NaN();
  std::size_t below = 0;
  std::size_t at_or_below = 0;
};

/// Builds the merged cut order from scratch and walks every cut position,
/// returning the first that reaches the target. A separate pass walks the
/// distinct key values for the smallest sufficient threshold.
inline ScanResult exhaustive_scan(const sirfp::LayerTopology& t,
                                  const std::vector<sirfp::ImportanceTrace>& traces, double target,
                                  double max_sparsity) {
  using namespace sirfp;
  const auto& layers = t.layers();
  struct Item {
    double key;
    std::size_t group;
    std::size_t pos;
  };
  std::vector<std::vector<std::size_t>> members(layers.size());
  std::vector<std::size_t> group_of(layers.size());
  // Recover coupling groups by id: layers sharing a consumer, transitively.
  std::vector<std::size_t> parent(layers.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto root = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x];
    return x;
  };
  for (const auto& a : t.links()) {
    for (const auto& b : t.links()) {
      if (a.consumer == b.consumer) parent[root(*t.find(a.producer))] = root(*t.find(b.producer));
    }
  }
  for (const auto& group : t.coupled()) {
    for (const auto& id : group) parent[root(*t.find(id))] = root(*t.find(group.front()));
  }
  // Name each group after its lowest layer; ties in the merged order break on it.
  std::vector<std::size_t> lowest(layers.size(), SIZE_MAX);
  for (std::size_t l = 0; l < layers.size(); ++l) lowest[root(l)] = std::min(lowest[root(l)], l);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    group_of[l] = lowest[root(l)];
    members[group_of[l]].push_back(l);
  }
  auto trace_for = [&](std::size_t l) -> const ImportanceTrace* {
    for (const auto& tr : traces) {
      if (tr.layer_id == layers[l].id) return &tr;
    }
    return nullptr;
  };

  std::vector<std::uint32_t> alive_count(layers.size());
  std::vector<Item> items;
  std::vector<std::vector<ChannelIndex>> cut_order(layers.size());
  for (std::size_t g = 0; g < layers.size(); ++g) {
    if (members[g].empty()) continue;
    const std::uint32_t width = layers[g].out_channels;
    bool prunable = true;
    for (auto l : members[g]) prunable = prunable && layers[l].prunable;
    if (!prunable) {
      alive_count[g] = width;
      continue;
    }
    std::vector<double> key(width, 0.0);
    const ImportanceTrace* lead = trace_for(members[g].front());
    for (auto l : members[g]) {
      double run = -std::numeric_limits<double>::infinity();
      for (const auto& e : trace_for(l)->order) {
        run = std::max(run, e.score);
        key[e.index] += run;
      }
    }
    // A channel some member kept to the end is cut last.
    for (auto l : members[g]) key[trace_for(l)->survivor] = std::numeric_limits<double>::infinity();
    std::vector<ChannelIndex> order;
    for (const auto& e : lead->order) order.push_back(e.index);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return key[a] < key[b]; });
    alive_count[g] = static_cast<std::uint32_t>(order.size() + 1);
    const std::uint32_t floor_keep =
        std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::ceil((1.0 - max_sparsity) * width - 1e-9)));
    const std::uint32_t already = width - alive_count[g];
    const std::size_t limit =
        width - floor_keep > already ? std::min<std::size_t>(width - floor_keep - already, order.size()) : 0;
    double run = -std::numeric_limits<double>::infinity();
    for (std::size_t p = 0; p < limit; ++p) {
      run = std::max(run, key[order[p]]);
      items.push_back({run, g, p});
    }
    cut_order[g] = order;
  }
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) {
    return std::tie(a.key, a.group, a.pos) < std::tie(b.key, b.group, b.pos);
  });

  std::vector<std::uint32_t> full(layers.size());
  for (std::size_t l = 0; l < layers.size(); ++l) full[l] = layers[l].out_channels;
  const double base = flops_oracle(t, full);
  auto keep_for = [&](std::size_t cut) {
    std::vector<std::uint32_t> g_keep = alive_count;
    for (std::size_t k = 0; k < cut; ++k) --g_keep[items[k].group];
    std::vector<std::uint32_t> keep(layers.size());
    for (std::size_t l = 0; l < layers.size(); ++l) keep[l] = g_keep[group_of[l]];
    return keep;
  };

  ScanResult r;
  for (std::size_t cut = 0; cut <= items.size(); ++cut) {
    const auto keep = keep_for(cut);
    const double red = 1.0 - flops_oracle(t, keep) / base;
    if (red >= target - 1e-12) {
      r.feasible = true;
      r.keep = keep;
      r.reduction = red;
      break;
    }
  }
  std::vector<double> values{-std::numeric_limits<double>::infinity()};
  for (const auto& it : items) values.push_back(it.key);
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  for (double s : values) {
    std::size_t cut = 0;
    while (cut < items.size() && items[cut].key <= s) ++cut;
    if (1.0 - flops_oracle(t, keep_for(cut)) / base >= target - 1e-12) {
      r.threshold = s;
      r.at_or_below = cut;
      while (r.below < items.size() && items[r.below].key < s) ++r.below;
      break;
    }
  }
  return r;
}

// ---- scratch directories --------------------------------------------------

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    std::random_device rd;
    path = std::filesystem::temp_directory_path() /
           ("sirfp_" + tag + "_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

}  // namespace testing
