// Copyright 2026 The dgsnap Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DGSNAP_PROJECTION_HPP
#define DGSNAP_PROJECTION_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dgsnap/digest.hpp"
#include "dgsnap/error.hpp"
#include "dgsnap/features.hpp"
#include "dgsnap/graph_types.hpp"

namespace dgsnap {

struct ProjectionConfig {
  /// Clamped below a third of the point count at run time.
  double perplexity = 30.0;
  int iterations = 500;
  double learning_rate = 200.0;
  std::uint64_t seed = 42;
  double early_exaggeration = 12.0;
  int exaggeration_iterations = 250;
  int momentum_switch_iteration = 250;
  double initial_momentum = 0.5;
  double final_momentum = 0.8;

  void validate() const {
    if (!(perplexity >= 2.0) || !std::isfinite(perplexity)) {
      throw Error(Errc::InvalidConfig, "perplexity must be >= 2");
    }
    if (iterations < 50) throw Error(Errc::InvalidConfig, "iterations must be >= 50");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
      throw Error(Errc::InvalidConfig, "learning_rate must be positive");
    }
    if (!(early_exaggeration >= 1.0) || !std::isfinite(early_exaggeration)) {
      throw Error(Errc::InvalidConfig, "early_exaggeration must be >= 1");
    }
    if (exaggeration_iterations < 0 || momentum_switch_iteration < 0) {
      throw Error(Errc::InvalidConfig, "iteration counts must be non-negative");
    }
  }
};

struct ProjectionPoint {
  std::string snapshot_id;
  double x = 0.0;
  double y = 0.0;
  std::size_t time_rank = 0;
};

struct Embedding {
  std::vector<Vec2> coords;
  double effective_perplexity = 0.0;
  /// KL divergence of the unexaggerated P against the initial layout.
  double kl_initial = 0.0;
  /// KL divergence when exaggeration is switched off.
  double kl_after_exaggeration = 0.0;
  double kl_final = 0.0;
};

namespace detail {

/// Packed strict upper triangle of an n x n symmetric matrix.
class PackedSymmetric {
 public:
  explicit PackedSymmetric(std::size_t n) : n_(n), data_(n * (n - 1) / 2, 0.0) {}
  double& at(std::size_t i, std::size_t j) {  // i < j
    return data_[i * (2 * n_ - i - 1) / 2 + (j - i - 1)];
  }
  std::span<double> row(std::size_t i) {  // entries (i, i+1..n-1)
    return {data_.data() + i * (2 * n_ - i - 1) / 2, n_ - i - 1};
  }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * (2 * n_ - i - 1) / 2, n_ - i - 1};
  }

 private:
  std::size_t n_;
  std::vector<double> data_;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double t = a[k] - b[k];
    d += t * t;
  }
  return d;
}

/// Gaussian conditional row for one point with a bandwidth found by bisection
/// on the entropy. `dist` holds squared distances to every other point.
inline void conditional_row(std::span<const double> dist, double log_perplexity,
                            std::span<double> out) {
  double beta = 1.0;
  double lo = -std::numeric_limits<double>::max();
  double hi = std::numeric_limits<double>::max();
  constexpr double kTol = 1e-5;
  for (int iter = 0; iter < 200; ++iter) {
    double sum = 0.0;
    for (std::size_t j = 0; j < dist.size(); ++j) {
      out[j] = std::exp(-beta * dist[j]);
      sum += out[j];
    }
    if (sum <= std::numeric_limits<double>::min()) sum = std::numeric_limits<double>::min();
    double weighted = 0.0;
    for (std::size_t j = 0; j < dist.size(); ++j) weighted += beta * dist[j] * out[j];
    const double entropy = std::log(sum) + weighted / sum;
    const double diff = entropy - log_perplexity;
    for (std::size_t j = 0; j < dist.size(); ++j) out[j] /= sum;
    if (std::abs(diff) < kTol) break;
    if (diff > 0) {
      lo = beta;
      beta = hi == std::numeric_limits<double>::max() ? beta * 2.0 : (beta + hi) / 2.0;
    } else {
      hi = beta;
      beta = lo == -std::numeric_limits<double>::max() ? beta / 2.0 : (beta + lo) / 2.0;
    }
  }
}

inline double kl_divergence(const PackedSymmetric& p, const std::vector<Vec2>& y) {
  const std::size_t n = y.size();
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double dx = y[i].x - y[j].x, dy = y[i].y - y[j].y;
      z += 2.0 / (1.0 + dx * dx + dy * dy);
    }
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto row = p.row(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const double pij = row[j - i - 1];
      if (pij <= 0.0) continue;
      const double dx = y[i].x - y[j].x, dy = y[i].y - y[j].y;
      const double q = std::max(1.0 / (1.0 + dx * dx + dy * dy) / z,
                                std::numeric_limits<double>::min());
      kl += 2.0 * pij * std::log(pij / q);
    }
  }
  return kl;
}

inline Vec2 initial_position(std::uint64_t seed, std::span<const double> point) {
  Sha256 h;
  h.update(std::string_view(reinterpret_cast<const char*>(&seed), sizeof(seed)));
  h.update(std::string_view(reinterpret_cast<const char*>(point.data()),
                            point.size() * sizeof(double)));
  const std::string hex = h.finish();
  std::mt19937_64 rng(std::stoull(hex.substr(0, 16), nullptr, 16));
  std::normal_distribution<double> jitter(0.0, 1e-4);
  const double x = jitter(rng);
  const double y = jitter(rng);
  return {x, y};
}

}  // namespace detail

/// Exact t-SNE into two dimensions. Results depend only on the multiset of
/// input points and the seed: the optimisation runs in a canonical
/// (lexicographic) point order and is mapped back to the caller's order.
inline Embedding tsne_embed(std::span<const std::vector<double>> data,
                            const ProjectionConfig& cfg = {}) {
  cfg.validate();
  const std::size_t n = data.size();
  if (n < 2) throw Error(Errc::TooFewPoints, "need at least two points");
  const std::size_t dim = data[0].size();
  for (const auto& p : data) {
    if (p.size() != dim) throw Error(Errc::DimensionMismatch, "points differ in length");
    for (double v : p) {
      if (!std::isfinite(v)) throw Error(Errc::DimensionMismatch, "non-finite coordinate");
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return data[a] < data[b]; });

  Embedding out;
  out.effective_perplexity =
      std::min(cfg.perplexity, std::max(1.0, static_cast<double>(n - 1) / 3.0));
  const double log_perp = std::log(out.effective_perplexity);

  // Conditional probabilities, symmetrised into the packed joint P.
  detail::PackedSymmetric p(n);
  {
    std::vector<double> dist(n - 1), cond(n - 1);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& xi = data[order[i]];
      for (std::size_t j = 0, k = 0; j < n; ++j) {
        if (j == i) continue;
        dist[k++] = detail::squared_distance(xi, data[order[j]]);
      }
      detail::conditional_row(dist, log_perp, cond);
      for (std::size_t j = 0, k = 0; j < n; ++j) {
        if (j == i) continue;
        const double v = cond[k++];
        if (j > i) p.at(i, j) += v; else p.at(j, i) += v;
      }
    }
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (double v : p.row(i)) total += 2.0 * v;
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (double& v : p.row(i)) v = std::max(v / total, std::numeric_limits<double>::min());
    }
  }

  std::vector<Vec2> y(n), velocity(n), gains(n, Vec2{1.0, 1.0}), grad(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = detail::initial_position(cfg.seed, data[order[i]]);
  out.kl_initial = detail::kl_divergence(p, y);
  out.kl_after_exaggeration = out.kl_initial;

  std::vector<Vec2> attract(n), repel(n);
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    if (iter == cfg.exaggeration_iterations && iter > 0) {
      out.kl_after_exaggeration = detail::kl_divergence(p, y);
    }
    const double exaggeration = iter < cfg.exaggeration_iterations ? cfg.early_exaggeration : 1.0;
    const double momentum =
        iter < cfg.momentum_switch_iteration ? cfg.initial_momentum : cfg.final_momentum;

    std::fill(attract.begin(), attract.end(), Vec2{});
    std::fill(repel.begin(), repel.end(), Vec2{});
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      auto row = p.row(i);
      for (std::size_t j = i + 1; j < n; ++j) {
        const double dx = y[i].x - y[j].x, dy = y[i].y - y[j].y;
        const double num = 1.0 / (1.0 + dx * dx + dy * dy);
        z += 2.0 * num;
        const double a = exaggeration * row[j - i - 1] * num;
        const double r = num * num;
        attract[i].x += a * dx; attract[i].y += a * dy;
        attract[j].x -= a * dx; attract[j].y -= a * dy;
        repel[i].x += r * dx; repel[i].y += r * dy;
        repel[j].x -= r * dx; repel[j].y -= r * dy;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      grad[i] = {4.0 * (attract[i].x - repel[i].x / z), 4.0 * (attract[i].y - repel[i].y / z)};
    }

    Vec2 mean{};
    for (std::size_t i = 0; i < n; ++i) {
      auto step = [&](double g, double& gain, double& vel, double& pos) {
        gain = (std::signbit(g) != std::signbit(vel)) ? gain + 0.2 : gain * 0.8;
        gain = std::max(gain, 0.01);
        vel = momentum * vel - cfg.learning_rate * gain * g;
        pos += vel;
      };
      step(grad[i].x, gains[i].x, velocity[i].x, y[i].x);
      step(grad[i].y, gains[i].y, velocity[i].y, y[i].y);
      mean.x += y[i].x;
      mean.y += y[i].y;
    }
    mean.x /= static_cast<double>(n);
    mean.y /= static_cast<double>(n);
    for (auto& v : y) {
      v.x -= mean.x;
      v.y -= mean.y;
    }
  }
  out.kl_final = detail::kl_divergence(p, y);
  if (cfg.iterations <= cfg.exaggeration_iterations) out.kl_after_exaggeration = out.kl_final;

  out.coords.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.coords[order[i]] = y[i];
  return out;
}

/// Projects combined vectors (given in time order) onto the plane. `ids`
/// names each point; ranks follow input order.
inline std::vector<ProjectionPoint> project(std::span<const CombinedVector> vectors,
                                            std::span<const std::string> ids,
                                            const ProjectionConfig& cfg = {},
                                            Embedding* diagnostics = nullptr) {
  if (ids.size() != vectors.size()) {
    throw Error(Errc::DimensionMismatch, "one id per vector required");
  }
  if (vectors.size() < 2) throw Error(Errc::TooFewPoints, "need at least two vectors");
  std::vector<std::vector<double>> data;
  data.reserve(vectors.size());
  for (const auto& v : vectors) {
    if (v.node_vec.size() != vectors[0].node_vec.size() ||
        v.link_vec.size() != vectors[0].link_vec.size()) {
      throw Error(Errc::DimensionMismatch, "combined vectors differ in length");
    }
    data.push_back(v.as_doubles());
  }
  Embedding emb = tsne_embed(data, cfg);
  std::vector<ProjectionPoint> out;
  out.reserve(vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    out.push_back({ids[i], emb.coords[i].x, emb.coords[i].y, i});
  }
  if (diagnostics) *diagnostics = std::move(emb);
  return out;
}

}  // namespace dgsnap

#endif  // DGSNAP_PROJECTION_HPP
