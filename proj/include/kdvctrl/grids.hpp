#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace kdvctrl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Uniform grid on [0, L] with n_x cells (n_x + 1 nodes).
struct SpatialGrid {
  double length_L = 0.0;
  int n_x = 0;
  double dx = 0.0;
  std::vector<double> nodes;

  int n_nodes() const { return n_x + 1; }
};

inline SpatialGrid build_grid(double length_L, int n_x) {
  if (!(length_L > 0.0))
    throw std::invalid_argument("build_grid: domain length must be positive, got " +
                                std::to_string(length_L));
  if (n_x < 8)
    throw std::invalid_argument("build_grid: n_x = " + std::to_string(n_x) +
                                " is below the minimum of 8 (third-derivative stencil)");
  SpatialGrid g;
  g.length_L = length_L;
  g.n_x = n_x;
  g.dx = length_L / n_x;
  g.nodes.resize(n_x + 1);
  for (int i = 0; i <= n_x; ++i) g.nodes[i] = (i * length_L) / n_x;
  g.nodes.back() = length_L;
  return g;
}

struct TimeGrid {
  double horizon_T = 0.0;
  int n_t = 0;
  double dt = 0.0;

  int n_samples() const { return n_t + 1; }
};

inline TimeGrid build_time_grid(double horizon_T, int n_t) {
  if (!(horizon_T > 0.0)) throw std::invalid_argument("build_time_grid: horizon must be positive");
  if (n_t < 8) throw std::invalid_argument("build_time_grid: n_t must be at least 8");
  return TimeGrid{horizon_T, n_t, horizon_T / n_t};
}

/// Two boundary-condition families, three channels each.
/// FamilyA: value at x=0, first derivative at x=L, second derivative at x=L.
/// FamilyB: value at x=0, value at x=L, first derivative at x=L.
enum class BcFamily { FamilyA, FamilyB };

enum class Channel { LeftValue, RightValue, RightSlope, RightCurvature };

inline std::array<Channel, 3> family_channels(BcFamily f) {
  if (f == BcFamily::FamilyA)
    return {Channel::LeftValue, Channel::RightSlope, Channel::RightCurvature};
  return {Channel::LeftValue, Channel::RightValue, Channel::RightSlope};
}

inline const char* channel_name(Channel c) {
  switch (c) {
    case Channel::LeftValue: return "left_value";
    case Channel::RightValue: return "right_value";
    case Channel::RightSlope: return "right_slope";
    case Channel::RightCurvature: return "right_curvature";
  }
  return "?";
}

inline const char* family_name(BcFamily f) {
  return f == BcFamily::FamilyA ? "A" : "B";
}

/// Natural Sobolev index of the boundary data on each channel (state in L2):
/// left value 1/3, right slope 0 (FamilyA) resp. right value 1/3 and right
/// slope 0 (FamilyB), right curvature -1/3.
inline double channel_sobolev_index(Channel c) {
  switch (c) {
    case Channel::LeftValue: return 1.0 / 3.0;
    case Channel::RightValue: return 1.0 / 3.0;
    case Channel::RightSlope: return 0.0;
    case Channel::RightCurvature: return -1.0 / 3.0;
  }
  return 0.0;
}

/// Trapezoid quadrature weights (dx at interior nodes, dx/2 at the ends).
inline Vector space_weights(const SpatialGrid& g) {
  Vector w = Vector::Constant(g.n_nodes(), g.dx);
  w(0) *= 0.5;
  w(g.n_x) *= 0.5;
  return w;
}

inline Vector time_weights(const TimeGrid& g) {
  Vector w = Vector::Constant(g.n_samples(), g.dt);
  w(0) *= 0.5;
  w(g.n_t) *= 0.5;
  return w;
}

inline double weighted_norm(const Vector& w, const Vector& v) {
  return std::sqrt(w.dot(v.cwiseProduct(v)));
}

inline double weighted_dot(const Vector& w, const Vector& a, const Vector& b) {
  return w.dot(a.cwiseProduct(b));
}

}  // namespace kdvctrl
