#include "sirfp/redundancy.hpp"

#include <algorithm>
#include <cmath>

#include "sirfp/error.hpp"

namespace sirfp {
namespace {

void require_same_shape(std::size_t a, std::size_t b) {
  if (a != b) {
    fail(Errc::ShapeMismatch, "maps hold " + std::to_string(a) + " and " + std::to_string(b) +
                                  " values");
  }
}

double kl_raw(std::span<const double> p, std::span<const double> q) {
  double sum = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] > 0.0) {
      if (!(q[k] > 0.0)) {
        fail(Errc::UnsupportedSupport, "q vanishes where p has mass (element " +
                                           std::to_string(k) + ")");
      }
      sum += p[k] * std::log(p[k] / q[k]);
    }
  }
  return sum;
}

// Both KL terms against the shared midpoint. (p + q) == (q + p) exactly and
// the final sum is commutative, so swapping arguments is bit-identical.
double js_raw(std::span<const double> p, std::span<const double> q) {
  double to_p = 0.0;
  double to_q = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const double m = 0.5 * (p[k] + q[k]);
    if (p[k] > 0.0) to_p += p[k] * std::log(p[k] / m);
    if (q[k] > 0.0) to_q += q[k] * std::log(q[k] / m);
  }
  const double r = kLn2 - (0.5 * to_p + 0.5 * to_q);
  return std::clamp(r, 0.0, kLn2);
}

std::vector<double> smoothed(std::span<const double> p, double epsilon) {
  std::vector<double> out(p.size());
  const double denom = 1.0 + epsilon * static_cast<double>(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) out[k] = (p[k] + epsilon) / denom;
  return out;
}

double kl_variant_raw(std::span<const double> p, std::span<const double> q) {
  const auto q_s = smoothed(q, kDefaultEpsilon);
  const auto p_s = smoothed(p, kDefaultEpsilon);
  const double d = 0.5 * (kl_raw(p, q_s) + kl_raw(q, p_s));
  return kLn2 * std::exp(-d);
}

double dice_raw(std::span<const double> p, std::span<const double> q) {
  double overlap = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) overlap += std::min(p[k], q[k]);
  return std::clamp(kLn2 * overlap, 0.0, kLn2);
}

double dot_raw(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) sum += a[k] * b[k];
  return sum;
}

std::vector<double> normalized_values(std::span<const double> map, double epsilon) {
  std::vector<double> out(map.size());
  double total = 0.0;
  for (std::size_t k = 0; k < map.size(); ++k) {
    if (!std::isfinite(map[k])) {
      fail(Errc::NonFiniteInput, "channel map element " + std::to_string(k) + " is not finite");
    }
    out[k] = std::max(map[k], 0.0) + epsilon;
    total += out[k];
  }
  for (auto& v : out) v /= total;
  return out;
}

}  // namespace

ProbabilityMap::ProbabilityMap(std::uint32_t height, std::uint32_t width, std::vector<double> values)
    : height_(height), width_(width), values_(std::move(values)) {
  if (height_ == 0 || width_ == 0) fail(Errc::ShapeMismatch, "probability map has a zero dimension");
  require_same_shape(values_.size(), std::size_t{height_} * width_);
  double sum = 0.0;
  for (double v : values_) {
    if (!std::isfinite(v) || v < 0.0) fail(Errc::NonFiniteInput, "probabilities must be finite and >= 0");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    fail(Errc::NonFiniteInput, "probabilities sum to " + std::to_string(sum));
  }
}

ProbabilityMap normalize_to_distribution(std::span<const double> channel_map, std::uint32_t height,
                                         std::uint32_t width, double epsilon) {
  if (!(epsilon > 0.0)) fail(Errc::InvalidArgument, "epsilon must be positive");
  require_same_shape(channel_map.size(), std::size_t{height} * width);
  return ProbabilityMap(height, width, normalized_values(channel_map, epsilon));
}

double kl_divergence(const ProbabilityMap& p, const ProbabilityMap& q) {
  require_same_shape(p.values().size(), q.values().size());
  return std::max(0.0, kl_raw(p.values(), q.values()));
}

double js_redundancy(const ProbabilityMap& fi, const ProbabilityMap& fj) {
  require_same_shape(fi.values().size(), fj.values().size());
  return js_raw(fi.values(), fj.values());
}

double variant_redundancy(const ProbabilityMap& fi, const ProbabilityMap& fj, Metric metric) {
  require_same_shape(fi.values().size(), fj.values().size());
  switch (metric) {
    case Metric::Js: return js_raw(fi.values(), fj.values());
    case Metric::Kl: return kl_variant_raw(fi.values(), fj.values());
    case Metric::Dice: return dice_raw(fi.values(), fj.values());
    case Metric::Dot: break;
  }
  fail(Errc::InvalidArgument, "dot redundancy is defined on raw maps, not probability maps");
}

double dot_redundancy(std::span<const double> raw_i, std::span<const double> raw_j) {
  require_same_shape(raw_i.size(), raw_j.size());
  return dot_raw(raw_i, raw_j);
}

SpatialMap resample(std::span<const double> map, std::uint32_t height, std::uint32_t width,
                    ResolutionScale scale) {
  require_same_shape(map.size(), std::size_t{height} * width);
  SpatialMap out;
  switch (scale) {
    case ResolutionScale::Full:
      out.height = height;
      out.width = width;
      out.values.assign(map.begin(), map.end());
      return out;
    case ResolutionScale::Pooled: {
      double sum = 0.0;
      for (double v : map) sum += v;
      out.values = {sum / static_cast<double>(map.size())};
      return out;
    }
    case ResolutionScale::Double:
      out.height = 2 * height;
      out.width = 2 * width;
      out.values.resize(std::size_t{out.height} * out.width);
      for (std::uint32_t y = 0; y < out.height; ++y) {
        for (std::uint32_t x = 0; x < out.width; ++x) {
          out.values[std::size_t{y} * out.width + x] = map[std::size_t{y / 2} * width + x / 2];
        }
      }
      return out;
    case ResolutionScale::Half:
    case ResolutionScale::Quarter:
      break;
  }

  const std::uint32_t factor = scale == ResolutionScale::Half ? 2 : 4;
  out.height = std::max<std::uint32_t>(1, height / factor);
  out.width = std::max<std::uint32_t>(1, width / factor);
  out.values.resize(std::size_t{out.height} * out.width);
  // Adaptive windows [floor(i*H/h), ceil((i+1)*H/h)) cover every input pixel.
  for (std::uint32_t oy = 0; oy < out.height; ++oy) {
    const std::uint32_t y0 = oy * height / out.height;
    const std::uint32_t y1 = ((oy + 1) * height + out.height - 1) / out.height;
    for (std::uint32_t ox = 0; ox < out.width; ++ox) {
      const std::uint32_t x0 = ox * width / out.width;
      const std::uint32_t x1 = ((ox + 1) * width + out.width - 1) / out.width;
      double sum = 0.0;
      for (std::uint32_t y = y0; y < y1; ++y) {
        for (std::uint32_t x = x0; x < x1; ++x) sum += map[std::size_t{y} * width + x];
      }
      out.values[std::size_t{oy} * out.width + ox] = sum / static_cast<double>((y1 - y0) * (x1 - x0));
    }
  }
  return out;
}

RedundancyMatrix pairwise_redundancy(const FeatureMapSet& fm, Metric metric, ResolutionScale scale,
                                     double epsilon) {
  const std::uint32_t n = fm.channels();
  std::vector<std::vector<double>> maps(n);
  for (std::uint32_t c = 0; c < n; ++c) {
    auto resampled = resample(fm.channel(c), fm.height(), fm.width(), scale);
    maps[c] = metric == Metric::Dot ? std::move(resampled.values)
                                    : normalized_values(resampled.values, epsilon);
  }

  RedundancyMatrix r{n, metric, std::vector<double>(std::size_t{n} * n)};
  for (std::uint32_t i = 0; i < n; ++i) {
    r.values[std::size_t{i} * n + i] = metric == Metric::Dot ? dot_raw(maps[i], maps[i]) : kLn2;
    for (std::uint32_t j = i + 1; j < n; ++j) {
      double v = 0.0;
      switch (metric) {
        case Metric::Js: v = js_raw(maps[i], maps[j]); break;
        case Metric::Kl: v = kl_variant_raw(maps[i], maps[j]); break;
        case Metric::Dice: v = dice_raw(maps[i], maps[j]); break;
        case Metric::Dot: v = dot_raw(maps[i], maps[j]); break;
      }
      r.values[std::size_t{i} * n + j] = v;
      r.values[std::size_t{j} * n + i] = v;
    }
  }
  return r;
}

}  // namespace sirfp
