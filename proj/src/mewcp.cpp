#include "sirfp/mewcp.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "sirfp/error.hpp"

namespace sirfp {
namespace {

bool strictly_less(double a, double b) noexcept { return a < b && !scores_tie(a, b); }

// Lowest-index minimum among active nodes.
std::optional<ChannelIndex> argmin_active(std::span<const double> sums,
                                          std::span<const std::uint8_t> active) {
  std::optional<ChannelIndex> best;
  for (std::size_t i = 0; i < sums.size(); ++i) {
    if (!active[i]) continue;
    if (!best || strictly_less(sums[i], sums[*best])) best = static_cast<ChannelIndex>(i);
  }
  return best;
}

class ExhaustiveSearch {
 public:
  ExhaustiveSearch(const EdgeWeightMatrix& m, std::uint32_t keep) : m_(m), keep_(keep) {
    chosen_.reserve(keep);
  }

  std::vector<ChannelIndex> run() {
    visit(0, 0.0);
    return best_;
  }

 private:
  // Enumerates subsets in lexicographic order; a later subset replaces the
  // incumbent only when strictly better, so ties keep the smallest set.
  void visit(std::uint32_t start, double partial) {
    if (chosen_.size() == keep_) {
      if (!have_best_ || (partial > best_value_ && !scores_tie(partial, best_value_))) {
        have_best_ = true;
        best_value_ = partial;
        best_ = chosen_;
      }
      return;
    }
    const std::uint32_t n = m_.size();
    const auto missing = keep_ - static_cast<std::uint32_t>(chosen_.size());
    for (std::uint32_t i = start; i + missing <= n; ++i) {
      double gain = 0.0;
      for (auto j : chosen_) gain += m_(i, j);
      chosen_.push_back(i);
      visit(i + 1, partial + gain);
      chosen_.pop_back();
    }
  }

  const EdgeWeightMatrix& m_;
  std::uint32_t keep_;
  std::vector<ChannelIndex> chosen_;
  std::vector<ChannelIndex> best_;
  double best_value_ = 0.0;
  bool have_best_ = false;
};

}  // namespace

bool scores_tie(double a, double b) noexcept {
  const double scale = std::max({1.0, std::abs(a), std::abs(b)});
  return std::abs(a - b) <= 1e-12 * scale;
}

double edge_sum(const EdgeWeightMatrix& m, std::span<const ChannelIndex> active, ChannelIndex i) {
  if (i >= m.size()) fail(Errc::IndexOutOfRange, "node " + std::to_string(i));
  bool member = false;
  double sum = 0.0;
  for (auto j : active) {
    if (j >= m.size()) fail(Errc::IndexOutOfRange, "node " + std::to_string(j));
    if (j == i) {
      member = true;
      continue;
    }
    sum += m(i, j);
  }
  if (!member) fail(Errc::IndexOutOfRange, "node " + std::to_string(i) + " is not active");
  return sum;
}

double clique_objective(const EdgeWeightMatrix& m, std::span<const ChannelIndex> kept) {
  double sum = 0.0;
  for (std::size_t a = 0; a < kept.size(); ++a) {
    for (std::size_t b = a + 1; b < kept.size(); ++b) sum += m(kept[a], kept[b]);
  }
  return 2.0 * sum;
}

CliqueSolution exact_mewcp(const EdgeWeightMatrix& m, std::uint32_t keep) {
  if (m.size() > kExactSolverMaxNodes) {
    fail(Errc::TooLarge, "exhaustive search is capped at " + std::to_string(kExactSolverMaxNodes) +
                             " nodes, got " + std::to_string(m.size()));
  }
  if (keep < 1 || keep > m.size()) {
    fail(Errc::BadCardinality, "keep " + std::to_string(keep) + " of " + std::to_string(m.size()));
  }
  CliqueSolution s;
  s.kept = ExhaustiveSearch(m, keep).run();
  s.objective = clique_objective(m, s.kept);
  return s;
}

ChannelIndex single_prune_closed_form(const EdgeWeightMatrix& m) {
  if (m.size() < 2) fail(Errc::TooSmall, "need at least two nodes to prune one");
  std::vector<double> sums(m.size());
  for (std::uint32_t i = 0; i < m.size(); ++i) {
    for (double a : m.row(i)) sums[i] += a;
  }
  const std::vector<std::uint8_t> active(m.size(), 1);
  return *argmin_active(sums, active);
}

CliqueSolution ehgp(const EdgeWeightMatrix& m, std::uint32_t num_to_prune,
                    const GreedyObserver& observer) {
  const std::uint32_t n = m.size();
  if (num_to_prune > n - 1) {
    fail(Errc::BadCardinality, "cannot prune " + std::to_string(num_to_prune) + " of " +
                                   std::to_string(n) + " nodes");
  }

  // The diagonal is zero, so a full row sum equals the sum over j != i.
  std::vector<double> sums(n, 0.0);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (double a : m.row(i)) sums[i] += a;
  }
  std::vector<std::uint8_t> active(n, 1);

  CliqueSolution s;
  s.removal_trace.reserve(num_to_prune);
  auto k = argmin_active(sums, active);
  for (std::uint32_t t = 0; t < num_to_prune; ++t) {
    const ChannelIndex removed = *k;
    active[removed] = 0;
    s.removal_trace.push_back({removed, sums[removed]});

    // a_ik == a_ki: walk row k contiguously instead of column k.
    const auto row = m.row(removed);
    std::optional<ChannelIndex> next;
    for (std::uint32_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      sums[i] -= row[i];
      if (!next || strictly_less(sums[i], sums[*next])) next = i;
    }
    if (observer) observer(GreedyStep{t, removed, s.removal_trace.back().score, sums, active});
    k = next;
  }

  for (std::uint32_t i = 0; i < n; ++i) {
    if (active[i]) s.kept.push_back(i);
  }
  s.objective = clique_objective(m, s.kept);
  return s;
}

CliqueSolution importance_trace(const EdgeWeightMatrix& m, const GreedyObserver& observer) {
  if (m.size() < 2) fail(Errc::TooSmall, "importance trace needs at least two channels");
  return ehgp(m, m.size() - 1, observer);
}

}  // namespace sirfp
