#pragma once

#include <array>
#include <memory>
#include <optional>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "kdvctrl/grids.hpp"

namespace kdvctrl {

using SparseMat = Eigen::SparseMatrix<double>;

/// Banded discretization of -d/dx - d^3/dx^3 (forward) or its reversal
/// +d/dx + d^3/dx^3 (adjoint marching variable s = T - t), with three rows
/// replaced by boundary-condition stencils.
///
/// Row layout:
///   forward FamilyA :  0 -> y(0),      n-1 -> y_xx(L),  n -> y_x(L)
///   forward FamilyB :  0 -> u(0),      n-1 -> u_x(L),   n -> u(L)
///   adjoint FamilyA :  0 -> psi(0),    1 -> psi_x(0),   n -> psi(L)+psi_xx(L)
///   adjoint FamilyB :  0 -> nu(0),     1 -> nu_x(0),    n -> nu(L)
struct DiscreteOperator {
  SparseMat matrix;
  std::array<int, 3> boundary_rows{};
  BcFamily family = BcFamily::FamilyA;
  bool adjoint_mode = false;
  SpatialGrid grid;

  bool is_boundary_row(int i) const {
    return i == boundary_rows[0] || i == boundary_rows[1] || i == boundary_rows[2];
  }
};

DiscreteOperator assemble_operator(const SpatialGrid& grid, BcFamily family,
                                   bool adjoint_mode = false);

/// Largest real part over the finite eigenvalues of the pencil (A_bc, I_pde):
/// the PDE rows of the operator against the identity with boundary rows
/// zeroed. This is the discrete spectrum of the boundary-value operator.
double spectral_abscissa(const DiscreteOperator& op);

/// One theta-scheme step with cached LU factorizations. bc_values are imposed
/// on the boundary rows at the new time level, in boundary_rows order.
class ThetaStepper {
 public:
  ThetaStepper(const DiscreteOperator& op, double dt, double theta = 0.5);

  Vector step(const Vector& state, const std::array<double, 3>& bc_values,
              const Vector* forcing = nullptr) const;

  /// Transpose sweep pieces for the exact adjoint of the time marching:
  /// solve (I - theta dt A_bc)^T g = v, then propagate v <- R_exp^T g.
  Vector solve_implicit_transpose(const Vector& v) const;
  Vector apply_explicit_transpose(const Vector& g) const;

  const DiscreteOperator& op() const { return *op_; }
  double dt() const { return dt_; }
  double theta() const { return theta_; }

 private:
  std::shared_ptr<const DiscreteOperator> op_;
  double dt_;
  double theta_;
  SparseMat explicit_mat_;             // (I + (1-theta) dt A), bc rows zeroed
  SparseMat explicit_mat_t_;
  Eigen::SparseLU<SparseMat> lu_;      // (I - theta dt A), bc rows replaced
  Eigen::SparseLU<SparseMat> lu_t_;
  Vector pde_mask_;                    // 1 on PDE rows, 0 on bc rows
};

/// Single step without caching: matches the ThetaStepper result exactly.
Vector step_theta(const Vector& state, const DiscreteOperator& op, double dt, double theta,
                  const Vector& forcing, const std::array<double, 3>& bc_values);

/// Full-grid first-derivative matrix (central interior rows, third-order
/// one-sided rows at the ends). Used by the skew-form nonlinear term and the
/// X_T-norm H1 seminorm.
SparseMat first_derivative_matrix(const SpatialGrid& grid);

}  // namespace kdvctrl
