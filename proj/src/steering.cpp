#include "kdvctrl/steering.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace kdvctrl {

namespace {

Matrix quadratic_forcing(const StateTrajectory& v, const SparseMat& d1) {
  Matrix f(v.samples.rows(), v.samples.cols());
  for (int m = 0; m < v.samples.rows(); ++m)
    f.row(m) = skew_nonlinear_term(d1, v.row(m)).transpose();
  return f;
}

StateTrajectory forced_controlled_solve(const Gramian& gramian, const Vector& y0,
                                        const std::vector<ControlSignal>& controls,
                                        const Matrix* forcing, double forcing_sign) {
  LinearProblem p;
  p.grid = gramian.grid;
  p.tgrid = gramian.tgrid;
  p.family = gramian.config.family;
  p.initial_state = y0;
  if (forcing != nullptr) p.forcing = forcing_sign * (*forcing);
  const auto chans = family_channels(gramian.config.family);
  for (const auto& sig : controls)
    for (int k = 0; k < 3; ++k)
      if (chans[k] == sig.channel) p.boundary_data[k] = sig;
  return solve_forward_linear(p);
}

}  // namespace

Vector nu_functional(const StateTrajectory& v) {
  const SparseMat d1 = first_derivative_matrix(v.grid);
  LinearProblem p;
  p.grid = v.grid;
  p.tgrid = v.tgrid;
  p.family = v.family;
  p.initial_state = Vector::Zero(v.grid.n_nodes());
  p.forcing = quadratic_forcing(v, d1);
  return solve_forward_linear(p).final_state();
}

SteeringResult picard_steer(const Gramian& gramian, const Vector& y0, const Vector& yT,
                            double delta_cap, int max_iter, double tol, double cg_tol) {
  const Vector w = space_weights(gramian.grid);
  const double data_size = weighted_norm(w, y0) + weighted_norm(w, yT);
  if (data_size > delta_cap)
    throw std::invalid_argument("picard_steer: ||y0|| + ||yT|| = " + std::to_string(data_size) +
                                " exceeds delta_cap = " + std::to_string(delta_cap) +
                                " (local theory)");
  const double sigma_tol = 1e-14 * std::max(1.0, gramian.norm_scale);
  if (gramian.sigma_min_filtered <= sigma_tol)
    throw std::runtime_error("picard_steer: degenerate Gramian (near-critical length?)");

  const SparseMat d1 = first_derivative_matrix(gramian.grid);
  const Vector free_T = gramian.map->free_final(y0);

  SteeringResult out;
  if (data_size == 0.0) {
    // zero fixed point, converged with zero controls at iteration 0
    SynthesisResult zero = synthesize_control(gramian, y0, yT, cg_tol);
    out.synthesis = zero;
    out.converged = true;
    return out;
  }

  SynthesisResult syn = synthesize_control(gramian, y0, yT, cg_tol);
  StateTrajectory v = forced_controlled_solve(gramian, y0, syn.controls, nullptr, 0.0);

  double prev_inc = 0.0;
  int bad_ratio_streak = 0;
  const double floor_scale = 10.0 * tol;
  for (int k = 1; k <= max_iter; ++k) {
    const Matrix fq = quadratic_forcing(v, d1);
    LinearProblem nu_p;
    nu_p.grid = gramian.grid;
    nu_p.tgrid = gramian.tgrid;
    nu_p.family = gramian.config.family;
    nu_p.initial_state = Vector::Zero(gramian.grid.n_nodes());
    nu_p.forcing = fq;
    const Vector nu = solve_forward_linear(nu_p).final_state();

    syn = synthesize_control(gramian, y0, yT + nu, cg_tol);
    StateTrajectory vn = forced_controlled_solve(gramian, y0, syn.controls, &fq, -1.0);

    StateTrajectory diff = vn;
    diff.samples -= v.samples;
    PicardState st;
    st.iterate_index = k;
    st.increment_norm = xt_norm(diff);
    st.contraction_ratio =
        k >= 2 ? st.increment_norm / prev_inc : std::numeric_limits<double>::quiet_NaN();
    st.target_defect = weighted_norm(w, yT + nu - free_T);
    st.trajectory = vn;
    st.controls = syn.controls;
    out.history.push_back(st);
    if (std::getenv("KDVCTRL_TRACE_PICARD"))
      std::fprintf(stderr, "picard it%d inc=%.3e ratio=%.3f cg=%d res=%.1e\n", k,
                   st.increment_norm, st.contraction_ratio, syn.cg_iterations, syn.cg_residual);

    v = vn;
    if (st.increment_norm < tol) {
      out.converged = true;
      prev_inc = st.increment_norm;
      break;
    }
    if (k >= 2 && st.contraction_ratio >= 1.0 && st.increment_norm > floor_scale) {
      if (++bad_ratio_streak >= 2)
        throw std::runtime_error(
            "picard_steer: contraction_ratio >= 1 for two consecutive iterations "
            "(amplitude outside contraction regime)");
    } else {
      bad_ratio_streak = 0;
    }
    prev_inc = st.increment_norm;
  }

  // Authoritative replay: feed the final controls to the nonlinear solver.
  LinearProblem rp;
  rp.grid = gramian.grid;
  rp.tgrid = gramian.tgrid;
  rp.family = gramian.config.family;
  rp.initial_state = y0;
  const auto chans = family_channels(gramian.config.family);
  for (const auto& sig : syn.controls)
    for (int k = 0; k < 3; ++k)
      if (chans[k] == sig.channel) rp.boundary_data[k] = sig;
  const StateTrajectory nonlinear = solve_forward_nonlinear(rp, 1e-13);

  out.synthesis = syn;
  out.synthesis.achieved_final = nonlinear.final_state();
  const double floor = 1e-14 * std::max(1.0, gramian.norm_scale);
  const double denom = std::max({weighted_norm(w, yT), weighted_norm(w, y0), floor});
  out.synthesis.relative_error = weighted_norm(w, nonlinear.final_state() - yT) / denom;
  return out;
}

}  // namespace kdvctrl
