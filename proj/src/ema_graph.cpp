#include "sirfp/ema_graph.hpp"

#include <vector>

#include "sirfp/error.hpp"

namespace sirfp {

EdgeWeightMatrix ema_init(std::uint32_t n, double alpha, std::string layer_id) {
  if (n == 0) fail(Errc::TooSmall, "edge graph needs at least one node");
  if (!(alpha > 0.0 && alpha < 1.0)) {
    fail(Errc::InvalidAlpha, "alpha must lie in (0,1), got " + std::to_string(alpha));
  }
  return EdgeWeightMatrix(std::move(layer_id), n, std::vector<double>(std::size_t{n} * n, 0.0), 0,
                          alpha);
}

EdgeWeightMatrix ema_update(const EdgeWeightMatrix& m, const RedundancyMatrix& r) {
  const std::uint32_t n = m.size();
  if (r.n != n || r.values.size() != std::size_t{n} * n) {
    fail(Errc::ShapeMismatch, "edge graph has " + std::to_string(n) +
                                  " nodes, redundancy matrix " + std::to_string(r.n));
  }
  const double alpha = m.alpha();
  const bool first = m.update_count() == 0;
  std::vector<double> next(std::size_t{n} * n, 0.0);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = i + 1; j < n; ++j) {
      const double target = 1.0 - r(i, j);
      const double a = first ? target : m(i, j) * alpha + target * (1.0 - alpha);
      next[std::size_t{i} * n + j] = a;
      next[std::size_t{j} * n + i] = a;
    }
  }
  return EdgeWeightMatrix(m.layer_id(), n, std::move(next), m.update_count() + 1, alpha);
}

EdgeWeightMatrix ema_shrink(const EdgeWeightMatrix& m, std::span<const std::uint32_t> keep) {
  if (keep.empty()) fail(Errc::TooSmall, "cannot shrink an edge graph to zero nodes");
  for (std::size_t k = 0; k < keep.size(); ++k) {
    if (keep[k] >= m.size()) fail(Errc::IndexOutOfRange, "node " + std::to_string(keep[k]));
    if (k > 0 && keep[k] <= keep[k - 1]) {
      fail(Errc::InvalidArgument, "kept nodes must be strictly increasing");
    }
  }
  const auto n = static_cast<std::uint32_t>(keep.size());
  std::vector<double> sub(std::size_t{n} * n);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t j = 0; j < n; ++j) sub[std::size_t{i} * n + j] = m(keep[i], keep[j]);
  }
  return EdgeWeightMatrix(m.layer_id(), n, std::move(sub), m.update_count(), m.alpha());
}

}  // namespace sirfp
