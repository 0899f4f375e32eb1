#pragma once

#include <array>
#include <cstddef>
#include <ostream>
#include <span>
#include <vector>

#include "ticketforge/mask.hpp"
#include "ticketforge/network.hpp"
#include "ticketforge/rng.hpp"

namespace ticketforge {

using Point2 = std::array<double, 2>;

/// Circle x(t_i) = radius·(u·cos t_i + v·sin t_i), t_i = 2πi/n_points, in
/// the input space spanned by the orthonormal pair (u, v).
struct CircleProbe {
  std::size_t n_points = 0;
  double radius = 1.0;
  std::vector<double> u;
  std::vector<double> v;

  std::size_t input_dim() const { return u.size(); }
  double angle(std::size_t i) const;
  /// n_points × input_dim, row-major.
  std::vector<double> points() const;
};

/// Basis from Gram-Schmidt on two standard-normal draws.
CircleProbe make_probe(std::size_t input_dim, std::size_t n_points, double radius, RngState& rng);
/// Explicit basis; throws unless (u, v) is orthonormal within 1e-10.
CircleProbe make_probe(std::vector<double> u, std::vector<double> v, std::size_t n_points,
                       double radius);

/// Orthonormal pair in logit space onto which outputs are projected.
struct Projection2D {
  std::vector<double> e1;
  std::vector<double> e2;

  std::size_t output_dim() const { return e1.size(); }
  Point2 apply(std::span<const double> y) const;
};

Projection2D make_projection(std::size_t output_dim, RngState& rng);
Projection2D make_projection(std::vector<double> e1, std::vector<double> e2);

struct TrajectoryResult {
  double length = 0.0;
  std::vector<Point2> points;
};

/// Σ‖p_{i+1} − p_i‖, plus p_n → p_1 when closed. Fewer than two points
/// have length 0.
double polyline_length(std::span<const Point2> points, bool closed);

/// Pushes the probe circle through the network (pre-softmax logits),
/// projects every output to 2D and measures the closed polyline.
TrajectoryResult measure(const NetworkSpec& spec, const Parameters& params, const MaskSet& mask,
                         const CircleProbe& probe, const Projection2D& proj);

/// CSV rows "t,p1,p2" with a header line.
void write_trajectory_csv(std::ostream& out, const CircleProbe& probe,
                          const TrajectoryResult& result);

}  // namespace ticketforge
