#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fracgamma/error.hpp"

namespace fracgamma {

enum class NodeRole : std::uint8_t { Interior, Boundary, Exterior };

inline const char* to_string(NodeRole role) {
  switch (role) {
    case NodeRole::Interior: return "interior";
    case NodeRole::Boundary: return "boundary";
    case NodeRole::Exterior: return "exterior";
  }
  return "?";
}

struct Interval {
  double a = 0.0;
  double b = 1.0;
  bool operator==(const Interval&) const = default;
};

struct Box {
  std::vector<double> lo;
  std::vector<double> hi;
  bool operator==(const Box&) const = default;
};

struct Disk {
  std::vector<double> center;
  double radius = 1.0;
  bool operator==(const Disk&) const = default;
};

using Shape = std::variant<Interval, Box, Disk>;

struct DomainSpec {
  Shape shape;
  double resolution = 0.1;

  bool operator==(const DomainSpec&) const = default;

  std::size_t dimension() const {
    return std::visit(
        [](const auto& s) -> std::size_t {
          using S = std::decay_t<decltype(s)>;
          if constexpr (std::is_same_v<S, Interval>) {
            return 1;
          } else if constexpr (std::is_same_v<S, Box>) {
            return s.lo.size();
          } else {
            return s.center.size();
          }
        },
        shape);
  }
};

struct Ball {
  std::vector<double> center;
  double radius = -1.0;
};

namespace detail {

inline double distance(std::span<const double> x, std::span<const double> y) {
  double acc = 0.0;
  for (std::size_t a = 0; a < x.size(); ++a) {
    const double d = x[a] - y[a];
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace detail

/// Discretized domain: points, per-node quadrature mass and role tags.
///
/// Points are stored row-major in one flat buffer. The diameter is the largest
/// pairwise distance among non-Exterior nodes, computed once at construction
/// (NaN when fewer than two such nodes exist).
class NodeCloud {
 public:
  NodeCloud() = default;

  NodeCloud(std::size_t dimension, std::vector<double> coords, std::vector<double> weights,
            std::vector<NodeRole> roles, std::optional<double> enclosure_factor = std::nullopt)
      : dimension_(dimension),
        coords_(std::move(coords)),
        weights_(std::move(weights)),
        roles_(std::move(roles)),
        enclosure_factor_(enclosure_factor) {
    detail::require(dimension_ >= 1, ErrorKind::InvalidArgument, "dimension must be positive");
    detail::require(coords_.size() % dimension_ == 0, ErrorKind::SizeMismatch,
                    "coordinate buffer is not a multiple of the dimension");
    const std::size_t n = coords_.size() / dimension_;
    detail::require(weights_.size() == n && roles_.size() == n, ErrorKind::SizeMismatch,
                    "weights/roles do not match the number of points");
    for (std::size_t i = 0; i < n; ++i) {
      detail::require(weights_[i] > 0.0 && std::isfinite(weights_[i]), ErrorKind::InvalidArgument,
                      "node weights must be positive and finite");
      for (std::size_t j = 0; j < i; ++j) {
        detail::require(distance(i, j) > 0.0, ErrorKind::InvalidArgument,
                        "points must be pairwise distinct (nodes " + std::to_string(j) + ", " +
                            std::to_string(i) + ")");
      }
    }
    diameter_ = compute_diameter();
  }

  std::size_t dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return weights_.size(); }

  std::span<const double> point(std::size_t i) const {
    return {coords_.data() + i * dimension_, dimension_};
  }
  double coord(std::size_t i, std::size_t axis) const { return coords_[i * dimension_ + axis]; }
  std::span<const double> coords() const noexcept { return coords_; }

  double weight(std::size_t i) const { return weights_[i]; }
  std::span<const double> weights() const noexcept { return weights_; }

  NodeRole role(std::size_t i) const { return roles_[i]; }
  std::span<const NodeRole> roles() const noexcept { return roles_; }

  double distance(std::size_t i, std::size_t j) const {
    return detail::distance(point(i), point(j));
  }

  /// Max pairwise distance among non-Exterior nodes (NaN if undefined).
  double diameter() const noexcept { return diameter_; }
  std::optional<double> enclosure_factor() const noexcept { return enclosure_factor_; }

  std::size_t count(NodeRole role) const {
    return static_cast<std::size_t>(std::count(roles_.begin(), roles_.end(), role));
  }
  bool has_exterior() const { return count(NodeRole::Exterior) > 0; }

  std::vector<std::size_t> indices(NodeRole role) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < size(); ++i) {
      if (roles_[i] == role) out.push_back(i);
    }
    return out;
  }

  bool operator==(const NodeCloud& other) const {
    return dimension_ == other.dimension_ && coords_ == other.coords_ &&
           weights_ == other.weights_ && roles_ == other.roles_ &&
           enclosure_factor_ == other.enclosure_factor_;
  }

 private:
  double compute_diameter() const {
    double best = -1.0;
    for (std::size_t i = 0; i < size(); ++i) {
      if (roles_[i] == NodeRole::Exterior) continue;
      for (std::size_t j = i + 1; j < size(); ++j) {
        if (roles_[j] == NodeRole::Exterior) continue;
        best = std::max(best, distance(i, j));
      }
    }
    return best < 0.0 ? std::numeric_limits<double>::quiet_NaN() : best;
  }

  std::size_t dimension_ = 1;
  std::vector<double> coords_;
  std::vector<double> weights_;
  std::vector<NodeRole> roles_;
  std::optional<double> enclosure_factor_;
  double diameter_ = std::numeric_limits<double>::quiet_NaN();
};

/// Max pairwise Euclidean distance over non-Exterior nodes.
inline double diameter(const NodeCloud& cloud) {
  const std::size_t n = cloud.size() - cloud.count(NodeRole::Exterior);
  detail::require(n >= 2, ErrorKind::DegenerateDomain,
                  "diameter needs at least two non-exterior nodes");
  return cloud.diameter();
}

namespace detail {

constexpr double kLatticeSlack = 1e-9;

inline void validate(const DomainSpec& spec) {
  require(std::isfinite(spec.resolution) && spec.resolution > 0.0, ErrorKind::InvalidArgument,
          "resolution must be positive");
  std::visit(
      [](const auto& s) {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Interval>) {
          require(std::isfinite(s.a) && std::isfinite(s.b) && s.a < s.b,
                  ErrorKind::InvalidArgument, "interval needs finite a < b");
        } else if constexpr (std::is_same_v<S, Box>) {
          require(!s.lo.empty() && s.lo.size() == s.hi.size(), ErrorKind::InvalidArgument,
                  "box needs matching non-empty lo/hi");
          for (std::size_t a = 0; a < s.lo.size(); ++a) {
            require(std::isfinite(s.lo[a]) && std::isfinite(s.hi[a]) && s.lo[a] < s.hi[a],
                    ErrorKind::InvalidArgument, "box needs finite lo < hi on every axis");
          }
        } else {
          require(!s.center.empty(), ErrorKind::InvalidArgument, "disk needs a center");
          for (double c : s.center) {
            require(std::isfinite(c), ErrorKind::InvalidArgument, "disk center must be finite");
          }
          require(std::isfinite(s.radius) && s.radius > 0.0, ErrorKind::InvalidArgument,
                  "disk radius must be positive");
        }
      },
      spec.shape);
}

inline bool inside(const Shape& shape, std::span<const double> x, double h) {
  const double slack = kLatticeSlack * h;
  return std::visit(
      [&](const auto& s) -> bool {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Interval>) {
          return x[0] >= s.a - slack && x[0] <= s.b + slack;
        } else if constexpr (std::is_same_v<S, Box>) {
          for (std::size_t a = 0; a < x.size(); ++a) {
            if (x[a] < s.lo[a] - slack || x[a] > s.hi[a] + slack) return false;
          }
          return true;
        } else {
          return distance(x, s.center) <= s.radius + slack;
        }
      },
      shape);
}

struct LatticeFrame {
  std::vector<double> anchor;
  std::vector<double> lower;
  std::vector<double> upper;
};

inline LatticeFrame frame_of(const Shape& shape) {
  return std::visit(
      [](const auto& s) -> LatticeFrame {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, Interval>) {
          return {{s.a}, {s.a}, {s.b}};
        } else if constexpr (std::is_same_v<S, Box>) {
          return {s.lo, s.lo, s.hi};
        } else {
          LatticeFrame f{s.center, s.center, s.center};
          for (std::size_t a = 0; a < s.center.size(); ++a) {
            f.lower[a] -= s.radius;
            f.upper[a] += s.radius;
          }
          return f;
        }
      },
      shape);
}

/// Calls visit(index_vector) for every integer multi-index in [lo, hi] (axis 0 outermost).
template <class Visit>
void for_each_multi_index(const std::vector<long>& lo, const std::vector<long>& hi,
                          Visit&& visit) {
  const std::size_t dim = lo.size();
  for (std::size_t a = 0; a < dim; ++a) {
    if (hi[a] < lo[a]) return;
  }
  std::vector<long> k = lo;
  while (true) {
    visit(k);
    std::size_t a = dim;
    bool advanced = false;
    while (a > 0 && !advanced) {
      --a;
      if (k[a] < hi[a]) {
        ++k[a];
        for (std::size_t b = a + 1; b < dim; ++b) k[b] = lo[b];
        advanced = true;
      }
    }
    if (!advanced) return;
  }
}

inline bool lexicographic_less(std::span<const double> x, std::span<const double> y) {
  return std::lexicographical_compare(x.begin(), x.end(), y.begin(), y.end());
}

/// Ball through `support` with center in their affine hull.
inline Ball circumball(const std::vector<std::span<const double>>& support, std::size_t dim) {
  Ball ball;
  if (support.empty()) return ball;
  const auto& p0 = support[0];
  ball.center.assign(p0.begin(), p0.end());
  ball.radius = 0.0;
  const std::size_t k = support.size() - 1;
  if (k == 0) return ball;

  std::vector<std::vector<double>> q(k, std::vector<double>(dim));
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t a = 0; a < dim; ++a) q[j][a] = support[j + 1][a] - p0[a];
  }
  // 2 Q Q^T lambda = |q_j|^2, solved by Gaussian elimination with partial pivoting.
  std::vector<std::vector<double>> m(k, std::vector<double>(k + 1));
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t l = 0; l < k; ++l) {
      double dot = 0.0;
      for (std::size_t a = 0; a < dim; ++a) dot += q[j][a] * q[l][a];
      m[j][l] = 2.0 * dot;
    }
    double sq = 0.0;
    for (std::size_t a = 0; a < dim; ++a) sq += q[j][a] * q[j][a];
    m[j][k] = sq;
  }
  for (std::size_t c = 0; c < k; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < k; ++r) {
      if (std::abs(m[r][c]) > std::abs(m[piv][c])) piv = r;
    }
    std::swap(m[c], m[piv]);
    if (std::abs(m[c][c]) < 1e-300) {
      // Affinely dependent support: fall back to the farthest pair.
      Ball best;
      for (std::size_t i = 0; i < support.size(); ++i) {
        for (std::size_t j = i + 1; j < support.size(); ++j) {
          const double d = distance(support[i], support[j]);
          if (d / 2.0 > best.radius) {
            best.radius = d / 2.0;
            best.center.assign(dim, 0.0);
            for (std::size_t a = 0; a < dim; ++a) {
              best.center[a] = 0.5 * (support[i][a] + support[j][a]);
            }
          }
        }
      }
      return best;
    }
    for (std::size_t r = c + 1; r < k; ++r) {
      const double f = m[r][c] / m[c][c];
      for (std::size_t l = c; l <= k; ++l) m[r][l] -= f * m[c][l];
    }
  }
  std::vector<double> lambda(k);
  for (std::size_t c = k; c-- > 0;) {
    double acc = m[c][k];
    for (std::size_t l = c + 1; l < k; ++l) acc -= m[c][l] * lambda[l];
    lambda[c] = acc / m[c][c];
  }
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t a = 0; a < dim; ++a) ball.center[a] += lambda[j] * q[j][a];
  }
  ball.radius = 0.0;
  for (const auto& s : support) ball.radius = std::max(ball.radius, distance(s, ball.center));
  return ball;
}

inline bool contains(const Ball& ball, std::span<const double> x) {
  if (ball.radius < 0.0) return false;
  return distance(x, ball.center) <= ball.radius * (1.0 + 1e-12) + 1e-14;
}

inline Ball welzl(const std::vector<std::span<const double>>& pts, std::size_t n,
                  std::vector<std::span<const double>>& support, std::size_t dim) {
  Ball ball = circumball(support, dim);
  if (support.size() == dim + 1) return ball;
  for (std::size_t i = 0; i < n; ++i) {
    if (!contains(ball, pts[i])) {
      support.push_back(pts[i]);
      ball = welzl(pts, i, support, dim);
      support.pop_back();
    }
  }
  return ball;
}

}  // namespace detail

/// Smallest ball containing every non-Exterior node (Welzl, fixed shuffle seed).
inline Ball smallest_enclosing_ball(const NodeCloud& cloud) {
  std::vector<std::span<const double>> pts;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (cloud.role(i) != NodeRole::Exterior) pts.push_back(cloud.point(i));
  }
  detail::require(!pts.empty(), ErrorKind::DegenerateDomain, "cloud has no domain nodes");
  std::mt19937_64 rng(0x5eed);
  std::shuffle(pts.begin(), pts.end(), rng);
  std::vector<std::span<const double>> support;
  return detail::welzl(pts, pts.size(), support, cloud.dimension());
}

/// Uniform lattice restricted to the shape. A node is Boundary iff one of its
/// 2N axis neighbours falls outside the shape. Weights are the cell volume h^N.
inline NodeCloud discretize(const DomainSpec& spec) {
  detail::validate(spec);
  const std::size_t dim = spec.dimension();
  const double h = spec.resolution;
  const auto frame = detail::frame_of(spec.shape);

  std::vector<long> lo(dim), hi(dim);
  for (std::size_t a = 0; a < dim; ++a) {
    lo[a] = static_cast<long>(
        std::ceil((frame.lower[a] - frame.anchor[a]) / h - detail::kLatticeSlack));
    hi[a] = static_cast<long>(
        std::floor((frame.upper[a] - frame.anchor[a]) / h + detail::kLatticeSlack));
  }

  struct Node {
    std::vector<double> x;
    NodeRole role;
  };
  std::vector<Node> nodes;
  std::vector<double> x(dim), y(dim);
  detail::for_each_multi_index(lo, hi, [&](const std::vector<long>& k) {
    for (std::size_t a = 0; a < dim; ++a) x[a] = frame.anchor[a] + static_cast<double>(k[a]) * h;
    if (!detail::inside(spec.shape, x, h)) return;
    NodeRole role = NodeRole::Interior;
    for (std::size_t a = 0; a < dim && role == NodeRole::Interior; ++a) {
      for (long step : {-1L, 1L}) {
        y = x;
        y[a] = frame.anchor[a] + static_cast<double>(k[a] + step) * h;
        if (!detail::inside(spec.shape, y, h)) {
          role = NodeRole::Boundary;
          break;
        }
      }
    }
    nodes.push_back({x, role});
  });

  std::stable_sort(nodes.begin(), nodes.end(), [](const Node& l, const Node& r) {
    return detail::lexicographic_less(l.x, r.x);
  });

  std::vector<double> coords;
  std::vector<NodeRole> roles;
  coords.reserve(nodes.size() * dim);
  for (const auto& node : nodes) {
    coords.insert(coords.end(), node.x.begin(), node.x.end());
    roles.push_back(node.role);
  }
  const auto interior = std::count(roles.begin(), roles.end(), NodeRole::Interior);
  const auto boundary = std::count(roles.begin(), roles.end(), NodeRole::Boundary);
  detail::require(interior >= 1 && boundary >= 1, ErrorKind::DegenerateDomain,
                  "resolution too coarse: need at least one interior and one boundary node, got " +
                      std::to_string(interior) + " interior");
  std::vector<double> weights(roles.size(), std::pow(h, static_cast<double>(dim)));
  return NodeCloud(dim, std::move(coords), std::move(weights), std::move(roles));
}

/// Appends Exterior lattice nodes filling the ball of diameter t*R about the
/// smallest-enclosing-ball center, skipping lattice sites already occupied.
/// Existing nodes keep their indices and roles; new nodes follow in
/// lexicographic order.
inline NodeCloud enclose(const NodeCloud& cloud, double t, double h) {
  detail::require(std::isfinite(t) && t > 1.0, ErrorKind::InvalidEnclosure,
                  "enclosure factor must exceed 1, got " + std::to_string(t));
  detail::require(std::isfinite(h) && h > 0.0, ErrorKind::InvalidArgument,
                  "lattice spacing must be positive");
  const std::size_t dim = cloud.dimension();
  const double radius = 0.5 * t * diameter(cloud);
  const Ball ball = smallest_enclosing_ball(cloud);

  std::size_t first = 0;
  while (cloud.role(first) == NodeRole::Exterior) ++first;
  const auto anchor = cloud.point(first);

  std::vector<long> lo(dim), hi(dim);
  for (std::size_t a = 0; a < dim; ++a) {
    lo[a] = static_cast<long>(
        std::ceil((ball.center[a] - radius - anchor[a]) / h - detail::kLatticeSlack));
    hi[a] = static_cast<long>(
        std::floor((ball.center[a] + radius - anchor[a]) / h + detail::kLatticeSlack));
  }

  std::vector<std::vector<double>> added;
  std::vector<double> x(dim);
  detail::for_each_multi_index(lo, hi, [&](const std::vector<long>& k) {
    for (std::size_t a = 0; a < dim; ++a) x[a] = anchor[a] + static_cast<double>(k[a]) * h;
    if (detail::distance(x, ball.center) > radius * (1.0 + 1e-12) + detail::kLatticeSlack * h) {
      return;
    }
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      if (detail::distance(x, cloud.point(i)) < 0.5 * h) return;
    }
    added.push_back(x);
  });
  std::sort(added.begin(), added.end(),
            [](const auto& l, const auto& r) { return detail::lexicographic_less(l, r); });

  std::vector<double> coords(cloud.coords().begin(), cloud.coords().end());
  std::vector<double> weights(cloud.weights().begin(), cloud.weights().end());
  std::vector<NodeRole> roles(cloud.roles().begin(), cloud.roles().end());
  const double mass = std::pow(h, static_cast<double>(dim));
  for (const auto& p : added) {
    coords.insert(coords.end(), p.begin(), p.end());
    weights.push_back(mass);
    roles.push_back(NodeRole::Exterior);
  }
  return NodeCloud(dim, std::move(coords), std::move(weights), std::move(roles), t);
}

}  // namespace fracgamma
