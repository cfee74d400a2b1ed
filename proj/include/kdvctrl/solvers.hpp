#pragma once

#include <array>
#include <optional>

#include "kdvctrl/grids.hpp"
#include "kdvctrl/operators.hpp"

namespace kdvctrl {

/// Space-time sample matrix of a solution: row m is the state at t_m.
struct StateTrajectory {
  SpatialGrid grid;
  TimeGrid tgrid;
  Matrix samples;  // (n_t+1) x (n_x+1)
  BcFamily family = BcFamily::FamilyA;

  Vector row(int m) const { return samples.row(m).transpose(); }
  Vector final_state() const { return samples.row(tgrid.n_t).transpose(); }
};

/// Time-sampled boundary datum with its Sobolev smoothness bookkeeping.
struct ControlSignal {
  TimeGrid tgrid;
  Vector samples;  // n_t+1 entries
  double sobolev_index = 0.0;
  Channel channel = Channel::RightSlope;
};

inline ControlSignal zero_signal(const TimeGrid& tg, Channel c) {
  return ControlSignal{tg, Vector::Zero(tg.n_samples()), channel_sobolev_index(c), c};
}

enum class Direction { Forward, AdjointBackward };

/// One linear time-marching problem. boundary_data entries follow the
/// family's channel order (family_channels); empty signals mean zero data.
/// forcing (optional) holds samples of f(x, t_m) in row m.
struct LinearProblem {
  SpatialGrid grid;
  TimeGrid tgrid;
  BcFamily family = BcFamily::FamilyA;
  Vector initial_state;                          // terminal state when adjoint-backward
  std::array<std::optional<ControlSignal>, 3> boundary_data;
  Matrix forcing;                                // empty or (n_t+1) x (n_x+1)
  Direction direction = Direction::Forward;
  double theta = 0.5;
};

StateTrajectory solve_forward_linear(const LinearProblem& p);

/// Backward adjoint march (homogeneous adjoint boundary rows), stored
/// forward-indexed: row m is the adjoint state at t_m.
StateTrajectory solve_adjoint(const LinearProblem& p);

/// Forward nonlinear march; the quadratic term is handled by a lagged inner
/// iteration per time step until the increment drops below picard_inner_tol.
StateTrajectory solve_forward_nonlinear(const LinearProblem& p, double picard_inner_tol = 1e-12);

struct TracePosition {
  enum Kind { Left, Right, Interior } kind = Left;
  double x = 0.0;  // used when kind == Interior

  static TracePosition left() { return {Left, 0.0}; }
  static TracePosition right() { return {Right, 0.0}; }
  static TracePosition interior(double x) { return {Interior, x}; }
};

/// Time signal of d^j/dx^j at a spatial position, second-order stencils
/// (3-point one-sided at the ends, central at interior nodes).
ControlSignal extract_trace(const StateTrajectory& traj, int derivative_order,
                            const TracePosition& pos);

/// Skew-form discretization of y*y_x: (y .* Dy)/3 + D(y.^2)/3.
Vector skew_nonlinear_term(const SparseMat& d1, const Vector& y);

/// Discrete X_T norm: max-over-time L2 plus the L2-in-time H1 seminorm.
double xt_norm(const StateTrajectory& traj);

/// Sup-over-time weighted-L2 distance between two trajectories on one grid.
double max_l2_distance(const StateTrajectory& a, const StateTrajectory& b);

}  // namespace kdvctrl
