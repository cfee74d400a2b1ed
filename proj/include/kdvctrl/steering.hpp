#pragma once

#include "kdvctrl/control.hpp"

namespace kdvctrl {

/// One record of the contraction-mapping loop.
struct PicardState {
  int iterate_index = 0;
  StateTrajectory trajectory;
  std::vector<ControlSignal> controls;
  double increment_norm = 0.0;      // X_T norm of v_{k+1} - v_k
  double contraction_ratio = 0.0;   // increment(k)/increment(k-1), NaN for k = 1
  double target_defect = 0.0;       // weighted norm of the linear synthesis defect
};

struct SteeringResult {
  std::vector<PicardState> history;
  SynthesisResult synthesis;  // relative_error from the nonlinear replay
  bool converged = false;
};

/// Final-time slice of the homogeneous-boundary forward solve with forcing
/// v v_x and zero initial state.
Vector nu_functional(const StateTrajectory& v);

/// Default small-data cap for the local steering theory.
inline double default_delta_cap(const SpatialGrid& grid) {
  return 0.05 * std::sqrt(grid.length_L / 2.0);
}

/// Contraction-mapping loop: iterate v <- linear solve steered to
/// yT + nu(T, v) with lagged forcing -v v_x, then replay the final controls
/// through the nonlinear solver for the authoritative relative error.
SteeringResult picard_steer(const Gramian& gramian, const Vector& y0, const Vector& yT,
                            double delta_cap, int max_iter, double tol, double cg_tol = 1e-12);

}  // namespace kdvctrl
