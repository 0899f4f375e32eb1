#include "ticketforge/trajectory.hpp"

#include <cmath>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <numbers>

#include "ticketforge/error.hpp"
#include "ticketforge/nn.hpp"

namespace ticketforge {

namespace {

constexpr double kOrthoTol = 1e-10;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void normalize(std::vector<double>& a) {
  const double n = std::sqrt(dot(a, a));
  if (!(n > 0.0)) throw Error("cannot normalize a zero vector");
  for (double& x : a) x /= n;
}

// Gram-Schmidt of two normal draws, with one re-orthogonalization pass.
std::pair<std::vector<double>, std::vector<double>> random_orthonormal_pair(std::size_t dim,
                                                                            RngState& rng) {
  std::vector<double> a(dim), b(dim);
  for (double& x : a) x = rng.normal();
  for (double& x : b) x = rng.normal();
  normalize(a);
  for (int pass = 0; pass < 2; ++pass) {
    const double c = dot(a, b);
    for (std::size_t i = 0; i < dim; ++i) b[i] -= c * a[i];
  }
  normalize(b);
  return {std::move(a), std::move(b)};
}

void check_orthonormal(const std::vector<double>& a, const std::vector<double>& b,
                       const char* what) {
  if (a.size() != b.size() || a.size() < 2) {
    throw Error(fmt::format("{} basis vectors must share a dimension of at least 2", what));
  }
  if (std::abs(dot(a, a) - 1.0) > kOrthoTol || std::abs(dot(b, b) - 1.0) > kOrthoTol ||
      std::abs(dot(a, b)) > kOrthoTol) {
    throw Error(fmt::format("{} basis is not orthonormal", what));
  }
}

}  // namespace

double CircleProbe::angle(std::size_t i) const {
  return 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n_points);
}

std::vector<double> CircleProbe::points() const {
  const std::size_t dim = input_dim();
  std::vector<double> x(n_points * dim);
  for (std::size_t i = 0; i < n_points; ++i) {
    const double c = radius * std::cos(angle(i));
    const double s = radius * std::sin(angle(i));
    for (std::size_t d = 0; d < dim; ++d) x[i * dim + d] = u[d] * c + v[d] * s;
  }
  return x;
}

CircleProbe make_probe(std::size_t input_dim, std::size_t n_points, double radius,
                       RngState& rng) {
  if (input_dim < 2) throw Error(fmt::format("probe needs input_dim >= 2, got {}", input_dim));
  auto [u, v] = random_orthonormal_pair(input_dim, rng);
  return make_probe(std::move(u), std::move(v), n_points, radius);
}

CircleProbe make_probe(std::vector<double> u, std::vector<double> v, std::size_t n_points,
                       double radius) {
  if (n_points < 3) throw Error(fmt::format("probe needs at least 3 points, got {}", n_points));
  if (!(radius > 0.0)) throw Error("probe radius must be positive");
  check_orthonormal(u, v, "probe");
  return CircleProbe{n_points, radius, std::move(u), std::move(v)};
}

Point2 Projection2D::apply(std::span<const double> y) const { return {dot(e1, y), dot(e2, y)}; }

Projection2D make_projection(std::size_t output_dim, RngState& rng) {
  if (output_dim < 2) throw Error("projection needs an output dimension of at least 2");
  auto [a, b] = random_orthonormal_pair(output_dim, rng);
  return make_projection(std::move(a), std::move(b));
}

Projection2D make_projection(std::vector<double> e1, std::vector<double> e2) {
  check_orthonormal(e1, e2, "projection");
  return Projection2D{std::move(e1), std::move(e2)};
}

double polyline_length(std::span<const Point2> points, bool closed) {
  if (points.size() < 2) return 0.0;
  auto seg = [](const Point2& a, const Point2& b) { return std::hypot(b[0] - a[0], b[1] - a[1]); };
  double len = 0.0;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) len += seg(points[i], points[i + 1]);
  if (closed) len += seg(points.back(), points.front());
  return len;
}

TrajectoryResult measure(const NetworkSpec& spec, const Parameters& params, const MaskSet& mask,
                         const CircleProbe& probe, const Projection2D& proj) {
  if (probe.input_dim() != shape_size(spec.input_shape)) {
    throw ShapeError(fmt::format("probe dimension {} does not match network input {}",
                                 probe.input_dim(), shape_size(spec.input_shape)));
  }
  if (proj.output_dim() != spec.num_classes) {
    throw ShapeError(fmt::format("projection dimension {} does not match {} classes",
                                 proj.output_dim(), spec.num_classes));
  }
  const Matrix logits = forward(spec, params, mask, probe.points(), probe.n_points);
  TrajectoryResult r;
  r.points.reserve(probe.n_points);
  for (std::size_t i = 0; i < probe.n_points; ++i) {
    r.points.push_back(proj.apply({logits.data.data() + i * logits.cols, logits.cols}));
  }
  r.length = polyline_length(r.points, true);
  return r;
}

void write_trajectory_csv(std::ostream& out, const CircleProbe& probe,
                          const TrajectoryResult& result) {
  out << "t,p1,p2\n";
  for (std::size_t i = 0; i < result.points.size(); ++i) {
    fmt::print(out, "{},{},{}\n", probe.angle(i), result.points[i][0], result.points[i][1]);
  }
}

}  // namespace ticketforge
