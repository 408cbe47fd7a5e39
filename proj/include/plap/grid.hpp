#pragma once

// Uniform lattice hZ^d, ball stencils B_r^h and the classification of
// lattice nodes into equation nodes (inside the open domain) and the
// Dirichlet boundary layer {x outside, dist(x, domain) <= r}.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "plap/errors.hpp"
#include "plap/kernel.hpp"

namespace plap {

using PointFn = std::function<double(std::span<const double>)>;

// Relative slack used when comparing lattice distances against r. Ties such
// as |h alpha| == r in exact arithmetic are resolved the same way no matter
// how the products round.
inline constexpr double kRadiusSlack = 1e-12;

/// Bounded open set with a membership test and an outward distance.
class Domain {
 public:
  using Predicate = std::function<bool(std::span<const double>)>;
  using Interval = std::pair<double, double>;

  /// `depth`, when given, is the distance from an interior point to the
  /// complement; it drives the default cone-shaped initial guess.
  Domain(int dimension, Predicate inside, PointFn dist_to_domain,
         std::vector<Interval> bounding_box, PointFn depth = {},
         std::string description = "custom")
      : dimension_(dimension),
        inside_(std::move(inside)),
        dist_(std::move(dist_to_domain)),
        depth_(std::move(depth)),
        bbox_(std::move(bounding_box)),
        description_(std::move(description)) {
    if (dimension_ < 1) throw InvalidParameter("domain dimension must be >= 1");
    if (static_cast<int>(bbox_.size()) != dimension_) {
      throw InvalidParameter("bounding box must have one interval per axis");
    }
    if (!inside_ || !dist_) {
      throw InvalidParameter("domain needs a membership test and a distance");
    }
  }

  static Domain interval(double a, double b) {
    if (!(a < b)) throw InvalidParameter("interval needs a < b");
    const double c = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    return Domain(
        1, [a, b](std::span<const double> x) { return a < x[0] && x[0] < b; },
        [c, half](std::span<const double> x) {
          return std::max(std::fabs(x[0] - c) - half, 0.0);
        },
        {{a, b}},
        [c, half](std::span<const double> x) {
          return std::max(half - std::fabs(x[0] - c), 0.0);
        },
        "interval");
  }

  static Domain ball(std::vector<double> center, double radius) {
    if (!(radius > 0.0)) throw InvalidParameter("ball radius must be > 0");
    const int d = static_cast<int>(center.size());
    std::vector<Interval> bbox;
    for (double c : center) bbox.emplace_back(c - radius, c + radius);
    auto norm = [center](std::span<const double> x) {
      double s = 0.0;
      for (std::size_t i = 0; i < center.size(); ++i) {
        s += (x[i] - center[i]) * (x[i] - center[i]);
      }
      return std::sqrt(s);
    };
    return Domain(
        d, [norm, radius](std::span<const double> x) { return norm(x) < radius; },
        [norm, radius](std::span<const double> x) {
          return std::max(norm(x) - radius, 0.0);
        },
        std::move(bbox),
        [norm, radius](std::span<const double> x) {
          return std::max(radius - norm(x), 0.0);
        },
        "ball");
  }

  static Domain box(std::vector<double> lo, std::vector<double> hi) {
    if (lo.size() != hi.size() || lo.empty()) {
      throw InvalidParameter("box corners must have equal nonzero dimension");
    }
    std::vector<Interval> bbox;
    for (std::size_t i = 0; i < lo.size(); ++i) {
      if (!(lo[i] < hi[i])) throw InvalidParameter("box needs lo < hi per axis");
      bbox.emplace_back(lo[i], hi[i]);
    }
    auto inside = [lo, hi](std::span<const double> x) {
      for (std::size_t i = 0; i < lo.size(); ++i) {
        if (!(lo[i] < x[i] && x[i] < hi[i])) return false;
      }
      return true;
    };
    auto dist = [lo, hi](std::span<const double> x) {
      double s = 0.0;
      for (std::size_t i = 0; i < lo.size(); ++i) {
        const double e = std::max({lo[i] - x[i], x[i] - hi[i], 0.0});
        s += e * e;
      }
      return std::sqrt(s);
    };
    auto depth = [lo, hi](std::span<const double> x) {
      double m = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < lo.size(); ++i) {
        m = std::min({m, x[i] - lo[i], hi[i] - x[i]});
      }
      return std::max(m, 0.0);
    };
    return Domain(static_cast<int>(lo.size()), inside, dist, std::move(bbox),
                  depth, "box");
  }

  int dimension() const noexcept { return dimension_; }
  bool inside(std::span<const double> x) const { return inside_(x); }
  double dist_to_domain(std::span<const double> x) const { return dist_(x); }
  bool has_depth() const noexcept { return static_cast<bool>(depth_); }
  double depth(std::span<const double> x) const { return depth_ ? depth_(x) : 0.0; }
  const std::vector<Interval>& bounding_box() const noexcept { return bbox_; }
  const std::string& description() const noexcept { return description_; }

 private:
  int dimension_;
  Predicate inside_;
  PointFn dist_;
  PointFn depth_;
  std::vector<Interval> bbox_;
  std::string description_;
};

/// kOpen keeps offsets with |h alpha| < r; kClosed also keeps |h alpha| = r.
enum class StencilBall { kOpen, kClosed };

/// Lattice offsets alpha != 0 with |h alpha| < r, in lexicographic order,
/// together with the operator prefactor h^d / (D_{d,p} |B_1| r^{p+d}).
class Stencil {
 public:
  Stencil(int dimension, double h, double r, Exponent p,
          NormalizationConstant constant, std::vector<int> offsets,
          StencilBall ball = StencilBall::kOpen)
      : dimension_(dimension),
        h_(h),
        r_(r),
        p_(p),
        constant_(constant),
        offsets_(std::move(offsets)),
        ball_(ball) {
    prefactor_ = std::pow(h_, dimension_) /
                 (constant_.value * constant_.omega_d *
                  std::pow(r_, p_.value() + dimension_));
  }

  int dimension() const noexcept { return dimension_; }
  double h() const noexcept { return h_; }
  double r() const noexcept { return r_; }
  const Exponent& exponent() const noexcept { return p_; }
  const NormalizationConstant& constant() const noexcept { return constant_; }
  double prefactor() const noexcept { return prefactor_; }
  StencilBall ball() const noexcept { return ball_; }

  std::size_t size() const noexcept { return offsets_.size() / dimension_; }
  std::span<const int> offset(std::size_t a) const noexcept {
    return {offsets_.data() + a * dimension_, static_cast<std::size_t>(dimension_)};
  }
  /// Position of -alpha for the offset at position `a`.
  std::size_t mirror(std::size_t a) const noexcept { return size() - 1 - a; }
  /// Offsets at positions [first_positive(), size()) are the
  /// lexicographically positive half.
  std::size_t first_positive() const noexcept { return size() / 2; }

 private:
  int dimension_;
  double h_;
  double r_;
  Exponent p_;
  NormalizationConstant constant_;
  double prefactor_ = 0.0;
  std::vector<int> offsets_;
  StencilBall ball_;
};

inline Stencil build_stencil(int d, double h, double r, const Exponent& p,
                             StencilBall ball = StencilBall::kOpen) {
  if (d < 1) throw InvalidParameter("dimension must be >= 1");
  if (!(h > 0.0) || !(r > 0.0)) throw InvalidParameter("h and r must be > 0");
  const int m = static_cast<int>(std::ceil(r / h));
  const bool closed = ball == StencilBall::kClosed;
  const double bound = (r / h) * (r / h) * (closed ? 1.0 + kRadiusSlack : 1.0 - kRadiusSlack);
  std::vector<int> offsets;
  std::vector<int> alpha(d, -m);
  // Odometer over [-m, m]^d, axis 0 slowest.
  while (true) {
    long long norm2 = 0;
    for (int v : alpha) norm2 += static_cast<long long>(v) * v;
    const auto n2 = static_cast<double>(norm2);
    if (norm2 > 0 && (closed ? n2 <= bound : n2 < bound)) {
      offsets.insert(offsets.end(), alpha.begin(), alpha.end());
    }
    int axis = d - 1;
    while (axis >= 0 && alpha[axis] == m) {
      alpha[axis] = -m;
      --axis;
    }
    if (axis < 0) break;
    ++alpha[axis];
  }
  if (offsets.empty()) {
    throw DegenerateStencil("no nonzero lattice offset satisfies |h alpha| < r (h = " +
                            std::to_string(h) + ", r = " + std::to_string(r) + ")");
  }
  return Stencil(d, h, r, p, normalization_constant(d, p), std::move(offsets), ball);
}

/// Lattice nodes of Omega_r^h. Interior (equation) nodes come first, then
/// the Dirichlet layer, each in lexicographic order.
class DomainDiscretization {
 public:
  int dimension() const noexcept { return dimension_; }
  double h() const noexcept { return h_; }
  double r() const noexcept { return r_; }

  std::size_t size() const noexcept { return box_index_.size(); }
  std::size_t interior_count() const noexcept { return interior_count_; }
  std::size_t dirichlet_count() const noexcept { return size() - interior_count_; }
  bool is_interior(std::size_t i) const noexcept { return i < interior_count_; }

  std::span<const int> multi_index(std::size_t i) const noexcept {
    return {nodes_.data() + i * dimension_, static_cast<std::size_t>(dimension_)};
  }
  double coordinate(std::size_t i, int axis) const noexcept {
    return h_ * nodes_[i * dimension_ + axis];
  }
  void point(std::size_t i, std::span<double> x) const noexcept {
    for (int a = 0; a < dimension_; ++a) x[a] = coordinate(i, a);
  }

  std::optional<std::size_t> index_of(std::span<const int> beta) const {
    if (static_cast<int>(beta.size()) != dimension_) return std::nullopt;
    std::int64_t b = 0;
    for (int a = 0; a < dimension_; ++a) {
      const int local = beta[a] - box_lo_[a];
      if (local < 0 || local >= box_dims_[a]) return std::nullopt;
      b += static_cast<std::int64_t>(local) * strides_[a];
    }
    const std::int32_t v = box_map_[b];
    if (v < 0) return std::nullopt;
    return static_cast<std::size_t>(v);
  }

  /// Index of node i shifted by the stencil offset at position `a`. Only
  /// valid for interior nodes, where the stencil closure invariant holds.
  std::size_t neighbor(std::size_t i, std::size_t a) const noexcept {
    return static_cast<std::size_t>(box_map_[box_index_[i] + shifts_[a]]);
  }
  std::size_t stencil_size() const noexcept { return shifts_.size(); }

 private:
  friend DomainDiscretization discretize_domain(const Domain&, double, double,
                                                const Stencil&);
  int dimension_ = 1;
  double h_ = 0.0;
  double r_ = 0.0;
  std::size_t interior_count_ = 0;
  std::vector<int> nodes_;
  std::vector<std::int64_t> box_index_;
  std::vector<int> box_lo_;
  std::vector<int> box_dims_;
  std::vector<std::int64_t> strides_;
  std::vector<std::int32_t> box_map_;
  std::vector<std::int64_t> shifts_;
};

inline DomainDiscretization discretize_domain(const Domain& domain, double h,
                                              double r, const Stencil& stencil) {
  const int d = domain.dimension();
  if (stencil.dimension() != d || stencil.h() != h || stencil.r() != r) {
    throw InvalidParameter("stencil must be built with the same (d, h, r)");
  }
  DomainDiscretization disc;
  disc.dimension_ = d;
  disc.h_ = h;
  disc.r_ = r;
  disc.box_lo_.resize(d);
  disc.box_dims_.resize(d);
  disc.strides_.resize(d);
  std::int64_t total = 1;
  for (int a = 0; a < d; ++a) {
    const auto [lo, hi] = domain.bounding_box()[a];
    const int first = static_cast<int>(std::floor((lo - r) / h)) - 1;
    const int last = static_cast<int>(std::ceil((hi + r) / h)) + 1;
    disc.box_lo_[a] = first;
    disc.box_dims_[a] = last - first + 1;
  }
  for (int a = d - 1; a >= 0; --a) {
    disc.strides_[a] = total;
    total *= disc.box_dims_[a];
  }
  disc.box_map_.assign(static_cast<std::size_t>(total), -1);

  std::vector<std::int64_t> interior_boxes;
  std::vector<std::int64_t> dirichlet_boxes;
  std::vector<double> x(d);
  std::vector<int> beta(d);
  const double layer = r * (1.0 + kRadiusSlack);
  for (std::int64_t b = 0; b < total; ++b) {
    std::int64_t rem = b;
    for (int a = 0; a < d; ++a) {
      beta[a] = disc.box_lo_[a] + static_cast<int>(rem / disc.strides_[a]);
      rem %= disc.strides_[a];
      x[a] = h * beta[a];
    }
    if (domain.inside(x)) {
      interior_boxes.push_back(b);
    } else if (domain.dist_to_domain(x) <= layer) {
      dirichlet_boxes.push_back(b);
    }
  }
  if (interior_boxes.empty()) {
    throw EmptyInterior("no lattice node of spacing " + std::to_string(h) +
                        " lies inside the domain");
  }
  disc.interior_count_ = interior_boxes.size();
  disc.box_index_ = std::move(interior_boxes);
  disc.box_index_.insert(disc.box_index_.end(), dirichlet_boxes.begin(),
                         dirichlet_boxes.end());
  if (disc.box_index_.size() > static_cast<std::size_t>(std::numeric_limits<std::int32_t>::max())) {
    throw InvalidParameter("lattice too large");
  }
  disc.nodes_.resize(disc.box_index_.size() * d);
  for (std::size_t i = 0; i < disc.box_index_.size(); ++i) {
    std::int64_t rem = disc.box_index_[i];
    for (int a = 0; a < d; ++a) {
      disc.nodes_[i * d + a] = disc.box_lo_[a] + static_cast<int>(rem / disc.strides_[a]);
      rem %= disc.strides_[a];
    }
    disc.box_map_[disc.box_index_[i]] = static_cast<std::int32_t>(i);
  }

  disc.shifts_.resize(stencil.size());
  for (std::size_t s = 0; s < stencil.size(); ++s) {
    std::int64_t shift = 0;
    for (int a = 0; a < d; ++a) shift += stencil.offset(s)[a] * disc.strides_[a];
    disc.shifts_[s] = shift;
  }
  // Stencil closure: every neighbor of an equation node is classified.
  for (std::size_t i = 0; i < disc.interior_count_; ++i) {
    for (std::size_t s = 0; s < stencil.size(); ++s) {
      if (disc.box_map_[disc.box_index_[i] + disc.shifts_[s]] < 0) {
        throw std::logic_error("stencil closure violated at an interior node");
      }
    }
  }
  return disc;
}

/// Values on the nodes of a discretization, in its index order.
class GridFunction {
 public:
  GridFunction(std::shared_ptr<const DomainDiscretization> disc,
               std::vector<double> values)
      : disc_(std::move(disc)), values_(std::move(values)) {
    if (!disc_) throw InvalidParameter("grid function needs a discretization");
    if (values_.size() != disc_->size()) {
      throw InvalidParameter("grid function length does not match node count");
    }
    for (double v : values_) {
      if (!std::isfinite(v)) throw NonFiniteSample("grid function value is not finite");
    }
  }

  static GridFunction zeros(std::shared_ptr<const DomainDiscretization> disc) {
    const std::size_t k = disc->size();
    return GridFunction(std::move(disc), std::vector<double>(k, 0.0));
  }

  const DomainDiscretization& discretization() const noexcept { return *disc_; }
  const std::shared_ptr<const DomainDiscretization>& shared_discretization() const noexcept {
    return disc_;
  }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> mutable_values() noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  std::size_t size() const noexcept { return values_.size(); }

 private:
  std::shared_ptr<const DomainDiscretization> disc_;
  std::vector<double> values_;
};

enum class NodeSet { kInterior, kDirichlet, kAll };

inline GridFunction sample_on_grid(std::shared_ptr<const DomainDiscretization> disc,
                                   const PointFn& fn, NodeSet which = NodeSet::kAll) {
  const DomainDiscretization& g = *disc;
  std::vector<double> values(g.size(), 0.0);
  std::vector<double> x(g.dimension());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const bool take = which == NodeSet::kAll ||
                      (which == NodeSet::kInterior) == g.is_interior(i);
    if (!take) continue;
    g.point(i, x);
    const double v = fn(x);
    if (!std::isfinite(v)) {
      throw NonFiniteSample("sampled function is not finite at node " + std::to_string(i));
    }
    values[i] = v;
  }
  return GridFunction(std::move(disc), std::move(values));
}

/// One node per line: `x_1 ... x_d value class`, class I (interior) or D.
inline void write_grid_dump(std::ostream& os, const GridFunction& u) {
  const DomainDiscretization& g = u.discretization();
  const auto old_flags = os.flags();
  const auto old_precision = os.precision();
  os << std::setprecision(17);
  for (std::size_t i = 0; i < g.size(); ++i) {
    for (int a = 0; a < g.dimension(); ++a) os << g.coordinate(i, a) << ' ';
    os << u[i] << ' ' << (g.is_interior(i) ? 'I' : 'D') << '\n';
  }
  os.flags(old_flags);
  os.precision(old_precision);
}

}  // namespace plap
