#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "kdvctrl/grids.hpp"
#include "kdvctrl/operators.hpp"
#include "kdvctrl/sobolev.hpp"
#include "kdvctrl/solvers.hpp"

namespace kdvctrl {

/// "Discrete" builds the Gramian from the exact transpose of the discrete
/// control-to-final map (exactly symmetric); "Continuous" feeds the traces of
/// the discretized adjoint system instead (cross-check, O(dx) budget).
enum class AdjointMode { Discrete, Continuous };

/// Auto = spectral solve with a machine-floor cutoff whenever the dense
/// Gramian is assembled (n_x <= 128-scale), matrix-free CG otherwise.
enum class GramianSolve { Auto, CG, FilteredProjection };

struct ControlConfig {
  BcFamily family = BcFamily::FamilyA;
  std::vector<Channel> active_channels;
  std::map<Channel, double> smoothing;   // Delta_t exponent per channel, 0 if absent
  double regularization_epsilon = 0.0;   // Tikhonov fallback, absolute
  AdjointMode adjoint_mode = AdjointMode::Discrete;
  GramianSolve solve_mode = GramianSolve::Auto;
  double filter_kappa = 12.0;            // smooth-subspace wavenumber cutoff
  long resource_budget = 4000000;        // guard on n_x * n_t

  double smoothing_of(Channel c) const {
    auto it = smoothing.find(c);
    return it == smoothing.end() ? 0.0 : it->second;
  }
  std::string id() const;
  void validate() const;
};

/// Linear map from stacked control samples to the final state, with its exact
/// transpose and the continuous-adjoint observation alternative. Stacked
/// layout: active channels in declaration order, n_t+1 samples each.
class ControlToFinalMap {
 public:
  ControlToFinalMap(const ControlConfig& config, const SpatialGrid& grid, const TimeGrid& tgrid);

  int n_controls() const { return int(config_.active_channels.size()) * tgrid_.n_samples(); }
  const ControlConfig& config() const { return config_; }
  const SpatialGrid& grid() const { return grid_; }
  const TimeGrid& tgrid() const { return tgrid_; }

  /// B h: forward solve from zero state driven by the stacked controls.
  Vector apply(const Vector& stacked) const;

  /// Plain matrix transpose B^T u (time-reversed sweep of the stepping).
  Vector apply_transpose(const Vector& u) const;

  /// Traces of the discretized adjoint system started from psi_T, stacked per
  /// channel with the duality signs (left value -> psi_xx(0,.),
  /// right slope -> psi_x(L,.), right curvature -> -psi(L,.),
  /// right value -> -nu_xx(L,.)).
  Vector observe_continuous(const Vector& psi_T) const;

  /// Free evolution (zero controls) of an initial state to time T.
  Vector free_final(const Vector& y0) const;

  /// Per-channel weight operator W (Delta_t^{2e} in the cosine basis).
  Vector apply_channel_weights(const Vector& stacked) const;

  /// Gramian operator product: z -> B W Q^{-1} B^T M z (discrete mode) or
  /// z -> B W Obs(z) (continuous mode).
  Vector gramian_product(const Vector& z) const;

  /// Stacked control samples the synthesizer pairs with a state z.
  Vector controls_from_state(const Vector& z) const;

  /// Dense B, column by column; guarded by the configured resource budget.
  Matrix explicit_matrix() const;

  /// Package a stacked control vector into per-channel signals.
  std::vector<ControlSignal> unstack(const Vector& stacked) const;

  const Vector& space_w() const { return space_w_; }
  const Vector& time_w() const { return time_w_; }

 private:
  ControlConfig config_;
  SpatialGrid grid_;
  TimeGrid tgrid_;
  std::shared_ptr<ThetaStepper> fwd_;
  Vector space_w_, time_w_;
  std::array<int, 3> channel_rows_{};  // operator row for each active channel
  std::shared_ptr<SpectralBasis> basis_;  // built only when smoothing is active
};

struct Gramian {
  ControlConfig config;
  SpatialGrid grid;
  TimeGrid tgrid;
  Matrix bilinear;        // M B W B* M; empty when over budget
  Matrix filter_basis;    // (n_x+1) x K cosine filter
  Matrix filter_block;    // V^T G V (symmetrized)
  Matrix filter_mass;     // V^T M V
  double sigma_min_filtered = 0.0;
  double norm_scale = 0.0;          // largest filtered eigenvalue
  double symmetry_defect = 0.0;     // ||G - G^T|| / ||G|| (dense mode only)
  double min_eigenvalue = 0.0;      // weighted spectrum floor (dense mode only)
  Matrix eig_vectors;               // weighted eigenbasis (dense mode only)
  Vector eig_values;
  std::shared_ptr<ControlToFinalMap> map;
};

Gramian assemble_gramian(const ControlConfig& config, const SpatialGrid& grid,
                         const TimeGrid& tgrid);

struct SynthesisResult {
  std::vector<ControlSignal> controls;
  Vector achieved_final;
  double relative_error = 0.0;
  double gramian_sigma_min = 0.0;
  int cg_iterations = 0;
  double cg_residual = 0.0;
  bool stalled = false;
};

/// Minimum-norm steering y0 -> yT through the Gramian solve; the achieved
/// final state and relative error come from an independent forward replay.
SynthesisResult synthesize_control(const Gramian& gramian, const Vector& y0, const Vector& yT,
                                   double cg_tol, int max_iterations = 0);

/// Discrete best-constant analogue 1/sqrt(sigma_min) over the smooth filter
/// subspace; +inf when the filtered Gramian is numerically singular.
double observability_constant(const Gramian& gramian);

/// Safeguarded conjugate gradients on an SPD operator given through `apply`:
/// tracks the best iterate and stops on stall or loss of positivity.
struct CgOutcome {
  Vector x;
  int iterations = 0;
  double relative_residual = 0.0;
  bool stalled = false;
};
CgOutcome conjugate_gradient(const std::function<Vector(const Vector&)>& apply, const Vector& rhs,
                             double tol, int max_iterations, int patience = 200);

}  // namespace kdvctrl
