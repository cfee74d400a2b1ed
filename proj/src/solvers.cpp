#include "kdvctrl/solvers.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace kdvctrl {

namespace {

void check_shapes(const LinearProblem& p) {
  if (p.initial_state.size() != p.grid.n_nodes())
    throw std::invalid_argument("solver: initial state has " +
                                std::to_string(p.initial_state.size()) + " entries, grid needs " +
                                std::to_string(p.grid.n_nodes()));
  if (p.forcing.size() != 0 &&
      (p.forcing.rows() != p.tgrid.n_samples() || p.forcing.cols() != p.grid.n_nodes()))
    throw std::invalid_argument("solver: forcing sample matrix has the wrong shape");
  const auto chans = family_channels(p.family);
  for (int k = 0; k < 3; ++k) {
    if (!p.boundary_data[k]) continue;
    if (p.boundary_data[k]->samples.size() != p.tgrid.n_samples())
      throw std::invalid_argument("solver: boundary signal length mismatch on channel " +
                                  std::string(channel_name(chans[k])));
  }
}

// bc slot order of the operator rows vs the family channel order:
// forward FamilyA rows {0, n-1, n} carry {left value, right curvature, right slope}
// forward FamilyB rows {0, n-1, n} carry {left value, right slope, right value}
// family_channels order is {h1,h2,h3} resp. {g1,g2,g3}.
std::array<int, 3> channel_to_row_slot(BcFamily family) {
  if (family == BcFamily::FamilyA) return {0, 2, 1};  // h1->row0, h2->row n, h3->row n-1
  return {0, 2, 1};                                   // g1->row0, g2->row n, g3->row n-1
}

}  // namespace

StateTrajectory solve_forward_linear(const LinearProblem& p) {
  if (p.direction != Direction::Forward)
    throw std::invalid_argument("solve_forward_linear: problem direction must be forward");
  check_shapes(p);
  const DiscreteOperator op = assemble_operator(p.grid, p.family, false);
  ThetaStepper stepper(op, p.tgrid.dt, p.theta);

  StateTrajectory traj{p.grid, p.tgrid, Matrix::Zero(p.tgrid.n_samples(), p.grid.n_nodes()),
                       p.family};
  traj.samples.row(0) = p.initial_state.transpose();
  Vector y = p.initial_state;
  const auto slot = channel_to_row_slot(p.family);
  Vector favg;
  for (int m = 0; m < p.tgrid.n_t; ++m) {
    const Vector* fptr = nullptr;
    if (p.forcing.size() != 0) {
      favg = (p.theta * p.forcing.row(m + 1) + (1.0 - p.theta) * p.forcing.row(m)).transpose();
      fptr = &favg;
    }
    std::array<double, 3> bc{0.0, 0.0, 0.0};
    for (int k = 0; k < 3; ++k)
      if (p.boundary_data[k]) bc[slot[k]] = p.boundary_data[k]->samples(m + 1);
    y = stepper.step(y, bc, fptr);
    traj.samples.row(m + 1) = y.transpose();
  }
  return traj;
}

StateTrajectory solve_adjoint(const LinearProblem& p) {
  if (p.direction != Direction::AdjointBackward)
    throw std::invalid_argument("solve_adjoint: problem direction must be adjoint-backward");
  check_shapes(p);
  for (const auto& b : p.boundary_data)
    if (b && b->samples.cwiseAbs().maxCoeff() != 0.0)
      throw std::invalid_argument("solve_adjoint: adjoint boundary data must be homogeneous");
  const DiscreteOperator op = assemble_operator(p.grid, p.family, true);
  ThetaStepper stepper(op, p.tgrid.dt, p.theta);

  StateTrajectory traj{p.grid, p.tgrid, Matrix::Zero(p.tgrid.n_samples(), p.grid.n_nodes()),
                       p.family};
  traj.samples.row(p.tgrid.n_t) = p.initial_state.transpose();
  Vector y = p.initial_state;
  const std::array<double, 3> bc{0.0, 0.0, 0.0};
  Vector favg;
  for (int m = p.tgrid.n_t; m >= 1; --m) {
    const Vector* fptr = nullptr;
    if (p.forcing.size() != 0) {
      favg = (p.theta * p.forcing.row(m - 1) + (1.0 - p.theta) * p.forcing.row(m)).transpose();
      fptr = &favg;
    }
    y = stepper.step(y, bc, fptr);
    traj.samples.row(m - 1) = y.transpose();
  }
  return traj;
}

StateTrajectory solve_forward_nonlinear(const LinearProblem& p, double picard_inner_tol) {
  if (p.direction != Direction::Forward)
    throw std::invalid_argument("solve_forward_nonlinear: problem direction must be forward");
  check_shapes(p);
  const DiscreteOperator op = assemble_operator(p.grid, p.family, false);
  ThetaStepper stepper(op, p.tgrid.dt, p.theta);
  const SparseMat d1 = first_derivative_matrix(p.grid);
  const Vector w = space_weights(p.grid);

  StateTrajectory traj{p.grid, p.tgrid, Matrix::Zero(p.tgrid.n_samples(), p.grid.n_nodes()),
                       p.family};
  traj.samples.row(0) = p.initial_state.transpose();
  Vector y = p.initial_state;
  Vector y_prev = p.initial_state;
  const auto slot = channel_to_row_slot(p.family);
  constexpr int kMaxSweeps = 50;

  for (int m = 0; m < p.tgrid.n_t; ++m) {
    std::array<double, 3> bc{0.0, 0.0, 0.0};
    for (int k = 0; k < 3; ++k)
      if (p.boundary_data[k]) bc[slot[k]] = p.boundary_data[k]->samples(m + 1);
    Vector fext = Vector::Zero(p.grid.n_nodes());
    if (p.forcing.size() != 0)
      fext = (p.theta * p.forcing.row(m + 1) + (1.0 - p.theta) * p.forcing.row(m)).transpose();

    const Vector n_old = skew_nonlinear_term(d1, y);
    Vector guess = m == 0 ? y : Vector(2.0 * y - y_prev);  // extrapolated warm start
    bool converged = false;
    double relax = 1.0;
    double prev_inc = std::numeric_limits<double>::infinity();
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
      Vector f = fext - 0.5 * (n_old + skew_nonlinear_term(d1, guess));
      Vector next = stepper.step(y, bc, &f);
      const double inc = weighted_norm(w, next - guess);
      if (inc > 1.2 * prev_inc && relax > 1.0 / 16.0) {
        // lagged sweep is expanding: damp it and restart from the old state
        relax *= 0.5;
        guess = y;  // drop the extrapolation too
        prev_inc = std::numeric_limits<double>::infinity();
        continue;
      }
      guess = relax == 1.0 ? std::move(next) : Vector(guess + relax * (next - guess));
      const bool stagnant = inc > 0.9 * prev_inc;
      prev_inc = inc;
      if (relax * inc < picard_inner_tol) {
        converged = true;
        break;
      }
      // roundoff floor: identical increments at working precision
      if (stagnant && inc < 1e4 * std::numeric_limits<double>::epsilon() *
                                std::max(1.0, weighted_norm(w, guess))) {
        converged = true;
        break;
      }
    }
    if (!converged)
      throw std::runtime_error(
          "solve_forward_nonlinear: inner iteration failed to converge in 50 sweeps at t=" +
          std::to_string((m + 1) * p.tgrid.dt) +
          " (state amplitude " + std::to_string(weighted_norm(w, y)) +
          "; data too large for the local theory)");
    y_prev = y;
    y = guess;
    traj.samples.row(m + 1) = y.transpose();
  }
  return traj;
}

ControlSignal extract_trace(const StateTrajectory& traj, int derivative_order,
                            const TracePosition& pos) {
  if (derivative_order < 0 || derivative_order > 2)
    throw std::invalid_argument("extract_trace: derivative order must be 0, 1 or 2");
  const int n = traj.grid.n_x;
  const double dx = traj.grid.dx;

  int node = 0;
  if (pos.kind == TracePosition::Right) node = n;
  if (pos.kind == TracePosition::Interior) {
    if (pos.x < 0.0 || pos.x > traj.grid.length_L)
      throw std::invalid_argument("extract_trace: position outside [0, L]");
    node = static_cast<int>(std::lround(pos.x / dx));
    node = std::max(1, std::min(n - 1, node));
  }

  // 3-point second-order stencils; central whenever the node allows it.
  std::array<int, 3> idx{};
  std::array<double, 3> coef{};
  if (derivative_order == 0) {
    idx = {node, node, node};
    coef = {1.0, 0.0, 0.0};
  } else if (node == 0) {
    idx = {0, 1, 2};
    if (derivative_order == 1)
      coef = {-3.0 / (2 * dx), 4.0 / (2 * dx), -1.0 / (2 * dx)};
    else
      coef = {1.0 / (dx * dx), -2.0 / (dx * dx), 1.0 / (dx * dx)};
  } else if (node == n) {
    idx = {n, n - 1, n - 2};
    if (derivative_order == 1)
      coef = {3.0 / (2 * dx), -4.0 / (2 * dx), 1.0 / (2 * dx)};
    else
      coef = {1.0 / (dx * dx), -2.0 / (dx * dx), 1.0 / (dx * dx)};
  } else {
    idx = {node - 1, node, node + 1};
    if (derivative_order == 1)
      coef = {-1.0 / (2 * dx), 0.0, 1.0 / (2 * dx)};
    else
      coef = {1.0 / (dx * dx), -2.0 / (dx * dx), 1.0 / (dx * dx)};
  }

  ControlSignal sig;
  sig.tgrid = traj.tgrid;
  sig.sobolev_index = (1.0 - derivative_order) / 3.0;
  sig.channel = pos.kind == TracePosition::Left
                    ? Channel::LeftValue
                    : (derivative_order == 1 ? Channel::RightSlope : Channel::RightCurvature);
  sig.samples = Vector::Zero(traj.tgrid.n_samples());
  for (int m = 0; m <= traj.tgrid.n_t; ++m) {
    double v = 0.0;
    for (int k = 0; k < 3; ++k) v += coef[k] * traj.samples(m, idx[k]);
    sig.samples(m) = v;
  }
  return sig;
}

Vector skew_nonlinear_term(const SparseMat& d1, const Vector& y) {
  return (y.cwiseProduct(d1 * y) + d1 * y.cwiseProduct(y)) / 3.0;
}

double xt_norm(const StateTrajectory& traj) {
  const Vector w = space_weights(traj.grid);
  const Vector q = time_weights(traj.tgrid);
  const SparseMat d1 = first_derivative_matrix(traj.grid);
  double sup_l2 = 0.0;
  double h1_acc = 0.0;
  for (int m = 0; m <= traj.tgrid.n_t; ++m) {
    const Vector y = traj.row(m);
    sup_l2 = std::max(sup_l2, weighted_norm(w, y));
    const Vector g = d1 * y;
    h1_acc += q(m) * w.dot(g.cwiseProduct(g));
  }
  return sup_l2 + std::sqrt(h1_acc);
}

double max_l2_distance(const StateTrajectory& a, const StateTrajectory& b) {
  if (a.samples.rows() != b.samples.rows() || a.samples.cols() != b.samples.cols())
    throw std::invalid_argument("max_l2_distance: trajectory shape mismatch");
  const Vector w = space_weights(a.grid);
  double worst = 0.0;
  for (int m = 0; m < a.samples.rows(); ++m)
    worst = std::max(worst, weighted_norm(w, (a.samples.row(m) - b.samples.row(m)).transpose()));
  return worst;
}

}  // namespace kdvctrl
