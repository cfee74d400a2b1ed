#include "kdvctrl/operators.hpp"

#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace kdvctrl {

namespace {

using Triplet = Eigen::Triplet<double>;

void add_d1_central(std::vector<Triplet>& t, int i, double dx, double sign) {
  t.emplace_back(i, i - 1, -sign / (2.0 * dx));
  t.emplace_back(i, i + 1, sign / (2.0 * dx));
}

void add_d3(std::vector<Triplet>& t, int i, int n, double dx, double sign) {
  const double c = sign / (2.0 * dx * dx * dx);
  if (i >= 2 && i <= n - 2) {
    t.emplace_back(i, i - 2, -c);
    t.emplace_back(i, i - 1, 2.0 * c);
    t.emplace_back(i, i + 1, -2.0 * c);
    t.emplace_back(i, i + 2, c);
  } else if (i == 1) {
    const double a[5] = {-3.0, 10.0, -12.0, 6.0, -1.0};
    for (int k = 0; k < 5; ++k) t.emplace_back(i, k, a[k] * c);
  } else if (i == n - 1) {
    const double a[5] = {3.0, -10.0, 12.0, -6.0, 1.0};
    for (int k = 0; k < 5; ++k) t.emplace_back(i, n - k, a[k] * c);
  }
}

// Third-order one-sided boundary stencils. The interior scheme is second
// order; bumping only the bc rows keeps the global L2 order at a clean 2.
void bc_value(std::vector<Triplet>& t, int row, int node) { t.emplace_back(row, node, 1.0); }

void bc_dx_left(std::vector<Triplet>& t, int row, double dx) {
  const double a[4] = {-11.0, 18.0, -9.0, 2.0};
  for (int k = 0; k < 4; ++k) t.emplace_back(row, k, a[k] / (6.0 * dx));
}

void bc_dx_right(std::vector<Triplet>& t, int row, int n, double dx) {
  const double a[4] = {11.0, -18.0, 9.0, -2.0};
  for (int k = 0; k < 4; ++k) t.emplace_back(row, n - k, a[k] / (6.0 * dx));
}

void bc_dxx_right(std::vector<Triplet>& t, int row, int n, double dx) {
  const double a[5] = {35.0, -104.0, 114.0, -56.0, 11.0};
  for (int k = 0; k < 5; ++k) t.emplace_back(row, n - k, a[k] / (12.0 * dx * dx));
}

}  // namespace

DiscreteOperator assemble_operator(const SpatialGrid& grid, BcFamily family, bool adjoint_mode) {
  const int n = grid.n_x;
  const double dx = grid.dx;
  const double sign = adjoint_mode ? 1.0 : -1.0;

  std::vector<Triplet> trip;
  trip.reserve(8 * (n + 1));

  const int pde_lo = adjoint_mode ? 2 : 1;
  const int pde_hi = adjoint_mode ? n - 1 : n - 2;
  for (int i = pde_lo; i <= pde_hi; ++i) {
    add_d1_central(trip, i, dx, sign);
    add_d3(trip, i, n, dx, sign);
  }

  DiscreteOperator op;
  op.family = family;
  op.adjoint_mode = adjoint_mode;
  op.grid = grid;
  if (!adjoint_mode) {
    bc_value(trip, 0, 0);
    if (family == BcFamily::FamilyA) {
      bc_dxx_right(trip, n - 1, n, dx);
      bc_dx_right(trip, n, n, dx);
    } else {
      bc_dx_right(trip, n - 1, n, dx);
      bc_value(trip, n, n);
    }
    op.boundary_rows = {0, n - 1, n};
  } else {
    bc_value(trip, 0, 0);
    bc_dx_left(trip, 1, dx);
    if (family == BcFamily::FamilyA) {
      bc_value(trip, n, n);
      bc_dxx_right(trip, n, n, dx);
    } else {
      bc_value(trip, n, n);
    }
    op.boundary_rows = {0, 1, n};
  }

  op.matrix.resize(n + 1, n + 1);
  op.matrix.setFromTriplets(trip.begin(), trip.end());
  op.matrix.makeCompressed();
  return op;
}

double spectral_abscissa(const DiscreteOperator& op) {
  const int n1 = op.grid.n_nodes();
  Matrix A = Matrix(op.matrix);
  Matrix B = Matrix::Identity(n1, n1);
  for (int b : op.boundary_rows) B.row(b).setZero();
  Eigen::GeneralizedEigenSolver<Matrix> ges(A, B, false);
  double worst = -std::numeric_limits<double>::infinity();
  const auto alphas = ges.alphas();
  const auto betas = ges.betas();
  for (int i = 0; i < alphas.size(); ++i) {
    if (std::abs(betas(i)) < 1e-10) continue;  // infinite eigenvalue from a bc row
    worst = std::max(worst, (alphas(i) / betas(i)).real());
  }
  return worst;
}

ThetaStepper::ThetaStepper(const DiscreteOperator& op, double dt, double theta)
    : op_(std::make_shared<DiscreteOperator>(op)), dt_(dt), theta_(theta) {
  if (!(dt > 0.0)) throw std::invalid_argument("ThetaStepper: dt must be positive");
  const int n1 = op.grid.n_nodes();
  SparseMat id(n1, n1);
  id.setIdentity();

  SparseMat implicit_mat = id - theta * dt * op.matrix;
  explicit_mat_ = id + (1.0 - theta) * dt * op.matrix;
  pde_mask_ = Vector::Ones(n1);

  // Replace bc rows: implicit side carries the stencil, explicit side is zeroed
  // so the boundary value at the new level comes purely from bc_values.
  Matrix imp = Matrix(implicit_mat);
  Matrix expl = Matrix(explicit_mat_);
  Matrix opd = Matrix(op.matrix);
  for (int b : op_->boundary_rows) {
    imp.row(b) = opd.row(b);
    expl.row(b).setZero();
    pde_mask_(b) = 0.0;
  }
  implicit_mat = imp.sparseView();
  implicit_mat.makeCompressed();
  explicit_mat_ = expl.sparseView();
  explicit_mat_.makeCompressed();
  explicit_mat_t_ = SparseMat(explicit_mat_.transpose());

  lu_.compute(implicit_mat);
  if (lu_.info() != Eigen::Success)
    throw std::runtime_error("ThetaStepper: singular implicit matrix (n_x=" +
                             std::to_string(op.grid.n_x) +
                             ", L=" + std::to_string(op.grid.length_L) +
                             ", dt=" + std::to_string(dt) + ")");
  SparseMat implicit_t = SparseMat(implicit_mat.transpose());
  lu_t_.compute(implicit_t);
  if (lu_t_.info() != Eigen::Success)
    throw std::runtime_error("ThetaStepper: singular transposed implicit matrix");
}

Vector ThetaStepper::step(const Vector& state, const std::array<double, 3>& bc_values,
                          const Vector* forcing) const {
  Vector rhs = explicit_mat_ * state;
  if (forcing != nullptr) rhs += dt_ * forcing->cwiseProduct(pde_mask_);
  for (int k = 0; k < 3; ++k) rhs(op_->boundary_rows[k]) = bc_values[k];
  return lu_.solve(rhs);
}

Vector ThetaStepper::solve_implicit_transpose(const Vector& v) const { return lu_t_.solve(v); }

Vector ThetaStepper::apply_explicit_transpose(const Vector& g) const {
  return explicit_mat_t_ * g;
}

Vector step_theta(const Vector& state, const DiscreteOperator& op, double dt, double theta,
                  const Vector& forcing, const std::array<double, 3>& bc_values) {
  ThetaStepper stepper(op, dt, theta);
  const Vector* f = forcing.size() == 0 ? nullptr : &forcing;
  return stepper.step(state, bc_values, f);
}

SparseMat first_derivative_matrix(const SpatialGrid& grid) {
  const int n = grid.n_x;
  const double dx = grid.dx;
  std::vector<Triplet> trip;
  trip.reserve(4 * (n + 1));
  for (int i = 1; i < n; ++i) {
    trip.emplace_back(i, i - 1, -1.0 / (2.0 * dx));
    trip.emplace_back(i, i + 1, 1.0 / (2.0 * dx));
  }
  const double a[4] = {-11.0, 18.0, -9.0, 2.0};
  for (int k = 0; k < 4; ++k) {
    trip.emplace_back(0, k, a[k] / (6.0 * dx));
    trip.emplace_back(n, n - k, -a[k] / (6.0 * dx));
  }
  SparseMat d(n + 1, n + 1);
  d.setFromTriplets(trip.begin(), trip.end());
  d.makeCompressed();
  return d;
}

}  // namespace kdvctrl
