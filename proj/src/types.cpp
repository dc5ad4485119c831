#include "sirfp/types.hpp"

#include <algorithm>
#include <cmath>

#include "sirfp/error.hpp"

namespace sirfp {

FeatureMapSet::FeatureMapSet(std::string layer_id, std::uint32_t channels, std::uint32_t height,
                             std::uint32_t width, std::vector<double> data)
    : layer_id_(std::move(layer_id)),
      channels_(channels),
      height_(height),
      width_(width),
      data_(std::move(data)) {
  if (channels_ == 0 || height_ == 0 || width_ == 0) {
    fail(Errc::LengthMismatch, "feature map dimensions must be >= 1");
  }
  const std::size_t expected = std::size_t{channels_} * height_ * width_;
  if (data_.size() != expected) {
    fail(Errc::LengthMismatch, "feature map '" + layer_id_ + "' holds " +
                                   std::to_string(data_.size()) + " values, expected " +
                                   std::to_string(expected));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) {
    if (!std::isfinite(data_[i])) {
      fail(Errc::NonFiniteValue, "feature map '" + layer_id_ + "' value " + std::to_string(i) +
                                     " is not finite");
    }
  }
}

std::span<const double> FeatureMapSet::channel(std::uint32_t c) const {
  if (c >= channels_) fail(Errc::IndexOutOfRange, "channel " + std::to_string(c));
  return std::span<const double>(data_).subspan(c * plane_size(), plane_size());
}

EdgeWeightMatrix::EdgeWeightMatrix(std::string layer_id, std::uint32_t n,
                                   std::vector<double> weights, std::uint64_t update_count,
                                   double alpha)
    : layer_id_(std::move(layer_id)),
      n_(n),
      weights_(std::move(weights)),
      update_count_(update_count),
      alpha_(alpha) {
  if (n_ == 0) fail(Errc::LengthMismatch, "edge matrix needs at least one node");
  if (weights_.size() != std::size_t{n_} * n_) {
    fail(Errc::LengthMismatch, "edge matrix holds " + std::to_string(weights_.size()) +
                                   " values for n=" + std::to_string(n_));
  }
  if (!(alpha_ > 0.0 && alpha_ < 1.0)) {
    fail(Errc::InvalidAlpha, "alpha must lie in (0,1), got " + std::to_string(alpha_));
  }
  for (std::uint32_t i = 0; i < n_; ++i) {
    if ((*this)(i, i) != 0.0) {
      fail(Errc::NonZeroDiagonal, "a(" + std::to_string(i) + "," + std::to_string(i) +
                                      ") = " + std::to_string((*this)(i, i)));
    }
    for (std::uint32_t j = i + 1; j < n_; ++j) {
      const double a = (*this)(i, j);
      if (!std::isfinite(a)) {
        fail(Errc::NonFiniteValue, "edge weight (" + std::to_string(i) + "," +
                                       std::to_string(j) + ") is not finite");
      }
      if (a != (*this)(j, i)) {
        fail(Errc::AsymmetryDetected, "a(" + std::to_string(i) + "," + std::to_string(j) +
                                          ") != a(" + std::to_string(j) + "," +
                                          std::to_string(i) + ")");
      }
    }
  }
}

PruneDecision::PruneDecision(std::string layer_id, std::uint32_t channels,
                             std::vector<ChannelIndex> kept, std::vector<ChannelIndex> pruned,
                             RemovalTrace removal_trace)
    : layer_id_(std::move(layer_id)),
      channels_(channels),
      kept_(std::move(kept)),
      pruned_(std::move(pruned)),
      trace_(std::move(removal_trace)) {
  std::sort(kept_.begin(), kept_.end());
  std::sort(pruned_.begin(), pruned_.end());

  std::vector<int> seen(channels_, 0);
  auto mark = [&](ChannelIndex c, const char* set) {
    if (c >= channels_) {
      fail(Errc::IndexOutOfRange, std::string(set) + " channel " + std::to_string(c) +
                                      " outside [0, " + std::to_string(channels_) + ")");
    }
    if (seen[c]++ != 0) {
      fail(Errc::OverlapDetected, "channel " + std::to_string(c) + " listed twice in layer '" +
                                      layer_id_ + "'");
    }
  };
  for (auto c : kept_) mark(c, "kept");
  for (auto c : pruned_) mark(c, "pruned");
  for (std::uint32_t c = 0; c < channels_; ++c) {
    if (seen[c] == 0) {
      fail(Errc::IncompleteCover, "channel " + std::to_string(c) + " of layer '" + layer_id_ +
                                      "' is neither kept nor pruned");
    }
  }

  if (trace_.size() != pruned_.size()) {
    fail(Errc::TraceMismatch, "removal trace has " + std::to_string(trace_.size()) +
                                  " entries for " + std::to_string(pruned_.size()) +
                                  " pruned channels");
  }
  std::vector<ChannelIndex> traced;
  traced.reserve(trace_.size());
  for (const auto& e : trace_) traced.push_back(e.index);
  std::sort(traced.begin(), traced.end());
  if (traced != pruned_) {
    fail(Errc::TraceMismatch, "removal trace does not cover exactly the pruned set");
  }
}

std::string_view to_string(Metric m) noexcept {
  switch (m) {
    case Metric::Js: return "js";
    case Metric::Kl: return "kl";
    case Metric::Dice: return "dice";
    case Metric::Dot: return "dot";
  }
  return "js";
}

Metric parse_metric(std::string_view text) {
  if (text == "js") return Metric::Js;
  if (text == "kl") return Metric::Kl;
  if (text == "dice") return Metric::Dice;
  if (text == "dot") return Metric::Dot;
  fail(Errc::InvalidArgument, "unknown metric '" + std::string(text) + "'");
}

std::string_view to_string(ResolutionScale s) noexcept {
  switch (s) {
    case ResolutionScale::Full: return "full";
    case ResolutionScale::Half: return "half";
    case ResolutionScale::Quarter: return "quarter";
    case ResolutionScale::Pooled: return "pooled";
    case ResolutionScale::Double: return "double";
  }
  return "full";
}

ResolutionScale parse_resolution(std::string_view text) {
  if (text == "full" || text == "1") return ResolutionScale::Full;
  if (text == "half" || text == "1/2") return ResolutionScale::Half;
  if (text == "quarter" || text == "1/4") return ResolutionScale::Quarter;
  if (text == "pooled" || text == "pooled-vector" || text == "vector") {
    return ResolutionScale::Pooled;
  }
  if (text == "double" || text == "2") return ResolutionScale::Double;
  fail(Errc::InvalidArgument, "unknown resolution scale '" + std::string(text) + "'");
}

void PruningPlan::validate() const {
  if (stage_targets.empty()) fail(Errc::InvalidPlan, "plan needs at least one stage");
  double previous = -1.0;
  for (double t : stage_targets) {
    if (!(t >= 0.0 && t < 1.0)) {
      fail(Errc::InvalidPlan, "stage target " + std::to_string(t) + " outside [0,1)");
    }
    if (!(t > previous)) fail(Errc::InvalidPlan, "stage targets must be strictly increasing");
    previous = t;
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    fail(Errc::InvalidAlpha, "alpha must lie in (0,1), got " + std::to_string(alpha));
  }
  if (!(max_channel_sparsity > 0.0 && max_channel_sparsity <= 1.0)) {
    fail(Errc::InvalidPlan, "max_channel_sparsity must lie in (0,1]");
  }
}

}  // namespace sirfp
