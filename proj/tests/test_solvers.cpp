#include <doctest.h>

#include "kdvctrl/rng.hpp"
#include <Eigen/Eigenvalues>

#include "kdvctrl/solvers.hpp"

using namespace kdvctrl;

namespace {

Vector compatible_bump(const SpatialGrid& g) {
  // x^2 (L-x)^3 vanishes with value/slope at 0 and value/slope/curvature at L
  Vector v(g.n_nodes());
  for (int i = 0; i < g.n_nodes(); ++i) {
    const double x = g.nodes[i], L = g.length_L;
    v(i) = x * x * std::pow(L - x, 3);
  }
  const Vector w = space_weights(g);
  return v / weighted_norm(w, v);
}

LinearProblem homogeneous_forward(const SpatialGrid& g, const TimeGrid& tg, BcFamily fam,
                                  const Vector& y0) {
  LinearProblem p;
  p.grid = g;
  p.tgrid = tg;
  p.family = fam;
  p.initial_state = y0;
  return p;
}

/// Smooth, bc-compatible, transient-free state: short homogeneous burn-in.
Vector prepared_state(const SpatialGrid& g, BcFamily fam, double burn_time = 0.25) {
  LinearProblem p = homogeneous_forward(g, build_time_grid(burn_time, 64), fam, compatible_bump(g));
  Vector v = solve_forward_linear(p).final_state();
  return v / weighted_norm(space_weights(g), v);
}

/// Dominant mode of the boundary-value pencil: the slowest-decaying discrete
/// state, on which the energy identity is transient-free.
Vector dominant_mode(const SpatialGrid& g, BcFamily fam, bool adjoint) {
  const DiscreteOperator op = assemble_operator(g, fam, adjoint);
  Matrix a = Matrix(op.matrix);
  Matrix b = Matrix::Identity(g.n_nodes(), g.n_nodes());
  for (int r : op.boundary_rows) b.row(r).setZero();
  Eigen::GeneralizedEigenSolver<Matrix> ges(a, b, true);
  int best = -1;
  double best_re = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < ges.alphas().size(); ++i) {
    if (std::abs(ges.betas()(i)) < 1e-10) continue;
    const std::complex<double> lam = ges.alphas()(i) / ges.betas()(i);
    if (lam.real() > best_re) {
      best_re = lam.real();
      best = i;
    }
  }
  REQUIRE(best >= 0);
  const Eigen::VectorXcd col = ges.eigenvectors().col(best);
  Vector v = col.real();
  if (v.cwiseAbs().maxCoeff() < 1e-8 * col.cwiseAbs().maxCoeff()) v = col.imag();
  return v / weighted_norm(space_weights(g), v);
}

Vector prepared_terminal(const SpatialGrid& g, BcFamily fam, std::uint64_t seed, int kmax = 3) {
  const CounterRng rng(seed);
  Vector raw = Vector::Zero(g.n_nodes());
  for (int k = 1; k <= kmax; ++k)
    for (int i = 0; i < g.n_nodes(); ++i) {
      const double x = g.nodes[i] / g.length_L;
      raw(i) += rng.normal(2 * k) / k * std::sin(k * M_PI * x) +
                rng.normal(2 * k + 1) / k * std::cos(k * M_PI * x);
    }
  LinearProblem p;
  p.grid = g;
  p.tgrid = build_time_grid(0.25, 64);
  p.family = fam;
  p.direction = Direction::AdjointBackward;
  p.initial_state = raw;
  Vector v = solve_adjoint(p).row(0);
  return v / weighted_norm(space_weights(g), v);
}

// Per-step defect of d/dt ||y||^2 = -(y(L)^2 + y_x(0)^2) (FamilyA) or
// d/dt ||u||^2 = -u_x(0)^2 (FamilyB), traces at the midpoint state with the
// scheme-order one-sided stencils.
double forward_energy_defect(const StateTrajectory& traj) {
  const SpatialGrid& g = traj.grid;
  const Vector w = space_weights(g);
  const double dx = g.dx, dt = traj.tgrid.dt;
  double worst = 0.0;
  for (int m = 0; m < traj.tgrid.n_t; ++m) {
    const Vector a = traj.row(m), b = traj.row(m + 1);
    const Vector mid = 0.5 * (a + b);
    const double dE = (w.dot(b.cwiseProduct(b)) - w.dot(a.cwiseProduct(a))) / dt;
    const double yx0 =
        (-11.0 * mid(0) + 18.0 * mid(1) - 9.0 * mid(2) + 2.0 * mid(3)) / (6.0 * dx);
    double flux;
    if (traj.family == BcFamily::FamilyA) {
      const double yL = mid(g.n_x);
      flux = yL * yL + yx0 * yx0;
    } else {
      flux = yx0 * yx0;
    }
    worst = std::max(worst, std::abs(dE + flux));
  }
  return worst;
}

// Backward adjoint in s = T - t: d/ds ||psi||^2 = -(psi(L)^2 + psi_x(L)^2)
// (FamilyA) or -psi_x(L)^2 (FamilyB).
double adjoint_energy_defect(const StateTrajectory& traj) {
  const SpatialGrid& g = traj.grid;
  const Vector w = space_weights(g);
  const double dx = g.dx, dt = traj.tgrid.dt;
  const int n = g.n_x;
  double worst = 0.0;
  for (int m = traj.tgrid.n_t; m >= 1; --m) {
    const Vector a = traj.row(m), b = traj.row(m - 1);
    const Vector mid = 0.5 * (a + b);
    const double dE = (w.dot(b.cwiseProduct(b)) - w.dot(a.cwiseProduct(a))) / dt;
    const double pxL =
        (11.0 * mid(n) - 18.0 * mid(n - 1) + 9.0 * mid(n - 2) - 2.0 * mid(n - 3)) / (6.0 * dx);
    double flux = pxL * pxL;
    if (traj.family == BcFamily::FamilyA) flux += mid(n) * mid(n);
    worst = std::max(worst, std::abs(dE + flux));
  }
  return worst;
}

double mms_error(BcFamily fam, int n_x, int n_t, double L = 1.0, double T = 1.0) {
  const SpatialGrid g = build_grid(L, n_x);
  const TimeGrid tg = build_time_grid(T, n_t);
  const double k = M_PI / L;
  auto exact = [&](double t) {
    Vector v(g.n_nodes());
    for (int i = 0; i < g.n_nodes(); ++i) v(i) = (1.0 + t) * std::sin(k * g.nodes[i]);
    return v;
  };
  LinearProblem p;
  p.grid = g;
  p.tgrid = tg;
  p.family = fam;
  p.initial_state = exact(0.0);
  p.forcing.resize(tg.n_samples(), g.n_nodes());
  for (int m = 0; m <= tg.n_t; ++m) {
    const double t = m * tg.dt;
    for (int i = 0; i < g.n_nodes(); ++i) {
      const double x = g.nodes[i];
      p.forcing(m, i) = std::sin(k * x) + (1.0 + t) * (k * std::cos(k * x) -
                                                       k * k * k * std::cos(k * x));
    }
  }
  const auto chans = family_channels(fam);
  for (int c = 0; c < 3; ++c) {
    ControlSignal sig = zero_signal(tg, chans[c]);
    for (int m = 0; m <= tg.n_t; ++m) {
      const double t = m * tg.dt;
      switch (chans[c]) {
        case Channel::LeftValue: sig.samples(m) = 0.0; break;
        case Channel::RightValue: sig.samples(m) = (1.0 + t) * std::sin(k * L); break;
        case Channel::RightSlope: sig.samples(m) = (1.0 + t) * k * std::cos(k * L); break;
        case Channel::RightCurvature:
          sig.samples(m) = -(1.0 + t) * k * k * std::sin(k * L);
          break;
      }
    }
    p.boundary_data[c] = sig;
  }
  const StateTrajectory traj = solve_forward_linear(p);
  const Vector w = space_weights(g);
  return weighted_norm(w, traj.final_state() - exact(T));
}

double adjoint_mms_error(int n_x, int n_t, double L = 1.0, double T = 1.0) {
  // psi*(x,t) = (2 + T - t) * x^2 (x - c) with c = (L^3 + 6L)/(L^2 + 2), so the
  // homogeneous adjoint rows psi(0) = psi_x(0) = psi(L)+psi_xx(L) = 0 hold.
  const SpatialGrid g = build_grid(L, n_x);
  const TimeGrid tg = build_time_grid(T, n_t);
  const double c = (L * L * L + 6.0 * L) / (L * L + 2.0);
  auto phi = [&](double x) { return x * x * (x - c); };
  auto phi_x = [&](double x) { return 3.0 * x * x - 2.0 * c * x; };
  auto amp = [&](double t) { return 2.0 + (T - t); };
  auto exact = [&](double t) {
    Vector v(g.n_nodes());
    for (int i = 0; i < g.n_nodes(); ++i) v(i) = amp(t) * phi(g.nodes[i]);
    return v;
  };
  LinearProblem p;
  p.grid = g;
  p.tgrid = tg;
  p.family = BcFamily::FamilyA;
  p.direction = Direction::AdjointBackward;
  p.initial_state = exact(T);
  p.forcing.resize(tg.n_samples(), g.n_nodes());
  for (int m = 0; m <= tg.n_t; ++m) {
    const double t = m * tg.dt;
    for (int i = 0; i < g.n_nodes(); ++i) {
      const double x = g.nodes[i];
      // f = -(psi_t + psi_x + psi_xxx)
      p.forcing(m, i) = -(-phi(x) + amp(t) * (phi_x(x) + 6.0));
    }
  }
  const StateTrajectory traj = solve_adjoint(p);
  const Vector w = space_weights(g);
  return weighted_norm(w, traj.row(0) - exact(0.0));
}

}  // namespace

TEST_CASE("zero data gives the zero trajectory") {
  const SpatialGrid g = build_grid(1.0, 32);
  const TimeGrid tg = build_time_grid(1.0, 32);
  const Vector zero = Vector::Zero(g.n_nodes());
  CHECK(solve_forward_linear(homogeneous_forward(g, tg, BcFamily::FamilyA, zero))
            .samples.cwiseAbs()
            .maxCoeff() == 0.0);
  LinearProblem adj = homogeneous_forward(g, tg, BcFamily::FamilyA, zero);
  adj.direction = Direction::AdjointBackward;
  CHECK(solve_adjoint(adj).samples.cwiseAbs().maxCoeff() == 0.0);
  CHECK(solve_forward_nonlinear(homogeneous_forward(g, tg, BcFamily::FamilyB, zero))
            .samples.cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("trajectory row 0 is the supplied initial state") {
  const SpatialGrid g = build_grid(1.0, 32);
  const TimeGrid tg = build_time_grid(0.5, 16);
  const Vector y0 = compatible_bump(g);
  const StateTrajectory t = solve_forward_linear(homogeneous_forward(g, tg, BcFamily::FamilyA, y0));
  CHECK((t.row(0) - y0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("energy identities for prepared states") {
  const SpatialGrid g = build_grid(1.0, 128);
  const TimeGrid tg = build_time_grid(1.0, 256);

  SUBCASE("FamilyA forward") {
    const Vector y0 = dominant_mode(g, BcFamily::FamilyA, false);
    const StateTrajectory t =
        solve_forward_linear(homogeneous_forward(g, tg, BcFamily::FamilyA, y0));
    CHECK(forward_energy_defect(t) < 1e-3);  // ||y0|| = 1
  }
  SUBCASE("FamilyB forward: small defect, refining at order ~2") {
    // FamilyB dissipates too fast for burn-in preparation (spectral abscissa
    // ~ -71); assert smallness for compatible low-frequency data plus the
    // refinement rate instead.
    auto defect_at = [&](int n) {
      const SpatialGrid gg = build_grid(1.0, n);
      Vector u0(gg.n_nodes());
      for (int i = 0; i < gg.n_nodes(); ++i)
        u0(i) = 0.5 * (1.0 - std::cos(2.0 * M_PI * gg.nodes[i]));  // value/slope-compatible
      u0 /= weighted_norm(space_weights(gg), u0);
      const TimeGrid tt = build_time_grid(1.0, 2 * n);
      return forward_energy_defect(
          solve_forward_linear(homogeneous_forward(gg, tt, BcFamily::FamilyB, u0)));
    };
    const double d128 = defect_at(128), d256 = defect_at(256);
    CHECK(d128 < 5e-2);
    CHECK(d256 < d128 / 2.5);
  }
  SUBCASE("FamilyA adjoint") {
    const Vector psiT = dominant_mode(g, BcFamily::FamilyA, true);
    LinearProblem p = homogeneous_forward(g, tg, BcFamily::FamilyA, psiT);
    p.direction = Direction::AdjointBackward;
    const StateTrajectory t = solve_adjoint(p);
    CHECK(adjoint_energy_defect(t) < 1e-3);
  }
}

TEST_CASE("manufactured-solution convergence is second order") {
  SUBCASE("FamilyA") {
    const double e64 = mms_error(BcFamily::FamilyA, 64, 64);
    const double e128 = mms_error(BcFamily::FamilyA, 128, 128);
    const double order = std::log2(e64 / e128);
    CHECK(order > 1.6);
    CHECK(order < 2.4);
    CHECK(e64 / e128 >= 3.5);
  }
  SUBCASE("FamilyB") {
    const double e64 = mms_error(BcFamily::FamilyB, 64, 64);
    const double e128 = mms_error(BcFamily::FamilyB, 128, 128);
    const double order = std::log2(e64 / e128);
    CHECK(order > 1.6);
    CHECK(order < 2.4);
  }
  SUBCASE("adjoint") {
    const double e64 = adjoint_mms_error(64, 64);
    const double e128 = adjoint_mms_error(128, 128);
    const double order = std::log2(e64 / e128);
    CHECK(order > 1.6);
    CHECK(order < 2.4);
  }
}

TEST_CASE("elementary terminal-state estimates hold with 10% slack") {
  const SpatialGrid g = build_grid(1.0, 96);
  const TimeGrid tg = build_time_grid(1.0, 192);
  const Vector w = space_weights(g);
  const Vector q = time_weights(tg);

  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Vector psiT = prepared_terminal(g, BcFamily::FamilyA, 100 + seed);
    LinearProblem p = homogeneous_forward(g, tg, BcFamily::FamilyA, psiT);
    p.direction = Direction::AdjointBackward;
    const StateTrajectory t = solve_adjoint(p);

    double l2l2 = 0.0;
    for (int m = 0; m <= tg.n_t; ++m) {
      const double nm = weighted_norm(w, t.row(m));
      l2l2 += q(m) * nm * nm;
    }
    const ControlSignal vL = extract_trace(t, 0, TracePosition::right());
    const ControlSignal sL = extract_trace(t, 1, TracePosition::right());
    const double lhs = std::pow(weighted_norm(w, psiT), 2);
    const double rhs = l2l2 / tg.horizon_T + q.dot(vL.samples.cwiseProduct(vL.samples)) +
                       q.dot(sL.samples.cwiseProduct(sL.samples));
    CHECK(lhs <= 1.1 * rhs);

    // reversed-variable form: traces at x = 0 of phi(x,t) = psi(L-x, T-t)
    StateTrajectory rev = t;
    for (int m = 0; m <= tg.n_t; ++m)
      for (int i = 0; i < g.n_nodes(); ++i)
        rev.samples(m, i) = t.samples(tg.n_t - m, g.n_x - i);
    const ControlSignal v0 = extract_trace(rev, 0, TracePosition::left());
    const ControlSignal s0 = extract_trace(rev, 1, TracePosition::left());
    const double lhs2 = std::pow(weighted_norm(w, rev.row(0)), 2);
    const double rhs2 = l2l2 / tg.horizon_T + q.dot(v0.samples.cwiseProduct(v0.samples)) +
                        q.dot(s0.samples.cwiseProduct(s0.samples));
    CHECK(lhs2 <= 1.1 * rhs2);
  }
}

TEST_CASE("superposition: trajectories depend linearly on the data") {
  const SpatialGrid g = build_grid(1.0, 48);
  const TimeGrid tg = build_time_grid(0.5, 64);
  const CounterRng rng(7);

  auto problem = [&](std::uint64_t base) {
    LinearProblem p = homogeneous_forward(g, tg, BcFamily::FamilyA, Vector::Zero(g.n_nodes()));
    for (int i = 0; i < g.n_nodes(); ++i) p.initial_state(i) = rng.normal(base + i);
    p.initial_state(0) = 0.0;
    ControlSignal h2 = zero_signal(tg, Channel::RightSlope);
    for (int m = 0; m <= tg.n_t; ++m) h2.samples(m) = rng.normal(base + 1000 + m);
    p.boundary_data[1] = h2;
    p.forcing = Matrix::Zero(tg.n_samples(), g.n_nodes());
    for (int m = 0; m <= tg.n_t; ++m)
      for (int i = 0; i < g.n_nodes(); ++i) p.forcing(m, i) = rng.normal(base + 5000 + m * 200 + i);
    return p;
  };
  const LinearProblem pa = problem(1), pb = problem(900000);
  LinearProblem pc = pa;
  pc.initial_state += pb.initial_state;
  pc.forcing += pb.forcing;
  pc.boundary_data[1]->samples += pb.boundary_data[1]->samples;

  const Matrix sum = solve_forward_linear(pa).samples + solve_forward_linear(pb).samples;
  const Matrix both = solve_forward_linear(pc).samples;
  const double scale = both.cwiseAbs().maxCoeff();
  CHECK((sum - both).cwiseAbs().maxCoeff() <= 1e-12 * scale);
}

TEST_CASE("FamilyA-to-FamilyB conversion reproduces the trajectory") {
  const SpatialGrid g = build_grid(1.0, 64);
  const TimeGrid tg = build_time_grid(1.0, 128);
  LinearProblem pa = homogeneous_forward(g, tg, BcFamily::FamilyA, Vector::Zero(g.n_nodes()));
  for (int i = 0; i < g.n_nodes(); ++i) {
    const double x = g.nodes[i];
    pa.initial_state(i) = x * std::sin(M_PI * x);
  }
  ControlSignal h1 = zero_signal(tg, Channel::LeftValue);
  ControlSignal h2 = zero_signal(tg, Channel::RightSlope);
  ControlSignal h3 = zero_signal(tg, Channel::RightCurvature);
  for (int m = 0; m <= tg.n_t; ++m) {
    const double t = m * tg.dt;
    h1.samples(m) = 0.02 * std::sin(2.0 * M_PI * t);
    h2.samples(m) = 0.05 * t * std::cos(3.0 * t);
    h3.samples(m) = 0.01 * t;
  }
  pa.boundary_data = {h1, h2, h3};
  const StateTrajectory ya = solve_forward_linear(pa);

  // g1 = h1, g2 = y(L,.), g3 = h2
  LinearProblem pb = homogeneous_forward(g, tg, BcFamily::FamilyB, pa.initial_state);
  ControlSignal g2 = extract_trace(ya, 0, TracePosition::right());
  g2.channel = Channel::RightValue;
  ControlSignal g1 = h1;
  ControlSignal g3 = h2;
  g3.channel = Channel::RightSlope;
  pb.boundary_data = {g1, g2, g3};
  const StateTrajectory yb = solve_forward_linear(pb);

  double scale = 0.0;
  const Vector w = space_weights(g);
  for (int m = 0; m <= tg.n_t; ++m) scale = std::max(scale, weighted_norm(w, ya.row(m)));
  CHECK(max_l2_distance(ya, yb) <= 10.0 * (g.dx * g.dx + tg.dt * tg.dt) * std::max(scale, 1.0));
}

TEST_CASE("one-step adjoint consistency") {
  const SpatialGrid g = build_grid(1.0, 64);
  const double dt = 1e-3;
  const DiscreteOperator fwd = assemble_operator(g, BcFamily::FamilyA, false);
  ThetaStepper sf(fwd, dt);
  const Vector w = space_weights(g);
  const CounterRng rng(3);
  Vector a(g.n_nodes()), b(g.n_nodes());
  for (int i = 0; i < g.n_nodes(); ++i) {
    a(i) = rng.normal(i);
    b(i) = rng.normal(1000 + i);
  }

  SUBCASE("weighted transpose is exact") {
    // <M a, b>_w = <a, M* b>_w with M* = W^{-1} M^T W
    const Vector ma = sf.step(a, {0.0, 0.0, 0.0});
    Vector mtb = sf.apply_explicit_transpose(sf.solve_implicit_transpose(w.cwiseProduct(b)));
    mtb = mtb.cwiseQuotient(w);
    const double lhs = weighted_dot(w, ma, b);
    const double rhs = weighted_dot(w, a, mtb);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(std::abs(lhs), 1.0));
  }

  SUBCASE("continuous adjoint rows agree to discretization order") {
    auto defect_at = [&](int n_x) {
      const SpatialGrid gg = build_grid(1.0, n_x);
      const double ddt = 1e-3;
      ThetaStepper f(assemble_operator(gg, BcFamily::FamilyA, false), ddt);
      ThetaStepper adj(assemble_operator(gg, BcFamily::FamilyA, true), ddt);
      const Vector ww = space_weights(gg);
      const Vector u = prepared_state(gg, BcFamily::FamilyA);
      const Vector v = prepared_terminal(gg, BcFamily::FamilyA, 77);
      const double lhs = weighted_dot(ww, f.step(u, {0.0, 0.0, 0.0}), v);
      const double rhs = weighted_dot(ww, u, adj.step(v, {0.0, 0.0, 0.0}));
      return std::abs(lhs - rhs);
    };
    const double d64 = defect_at(64), d128 = defect_at(128);
    CHECK(d128 < 0.7 * d64);  // converging under refinement
    CHECK(d64 < 5e-3);        // small at working resolution
  }
}

TEST_CASE("nonlinear solver") {
  SUBCASE("quadratic smallness: nonlinear-linear gap scales like amplitude^2") {
    const SpatialGrid g = build_grid(1.0, 64);
    const TimeGrid tg = build_time_grid(1.0, 128);
    auto gap = [&](double delta) {
      LinearProblem p = homogeneous_forward(g, tg, BcFamily::FamilyA, delta * compatible_bump(g));
      const StateTrajectory lin = solve_forward_linear(p);
      const StateTrajectory non = solve_forward_nonlinear(p, 1e-13);
      return max_l2_distance(lin, non);
    };
    const double k2 = gap(1e-2) / 1e-4;
    const double k3 = gap(1e-3) / 1e-6;
    CHECK(k2 == doctest::Approx(k3).epsilon(0.05));  // fitted K stable under refinement
  }

  SUBCASE("manufactured nonlinear convergence is second order") {
    auto err = [&](int n) {
      const SpatialGrid g = build_grid(1.0, n);
      const TimeGrid tg = build_time_grid(1.0, n);
      const double k = M_PI;
      LinearProblem p = homogeneous_forward(g, tg, BcFamily::FamilyA, Vector::Zero(g.n_nodes()));
      for (int i = 0; i < g.n_nodes(); ++i) p.initial_state(i) = 0.2 * std::sin(k * g.nodes[i]);
      p.forcing.resize(tg.n_samples(), g.n_nodes());
      for (int m = 0; m <= tg.n_t; ++m) {
        const double t = m * tg.dt, am = 1.0 + t;
        for (int i = 0; i < g.n_nodes(); ++i) {
          const double x = g.nodes[i];
          const double y = 0.2 * am * std::sin(k * x), yx = 0.2 * am * k * std::cos(k * x);
          p.forcing(m, i) =
              0.2 * (std::sin(k * x) + am * k * std::cos(k * x) -
                     am * k * k * k * std::cos(k * x)) + y * yx;
        }
      }
      const auto chans = family_channels(BcFamily::FamilyA);
      for (int c = 0; c < 3; ++c) {
        ControlSignal sig = zero_signal(tg, chans[c]);
        for (int m = 0; m <= tg.n_t; ++m) {
          const double am = 1.0 + m * tg.dt;
          if (chans[c] == Channel::RightSlope) sig.samples(m) = 0.2 * am * k * std::cos(k);
          if (chans[c] == Channel::RightCurvature)
            sig.samples(m) = -0.2 * am * k * k * std::sin(k);
        }
        p.boundary_data[c] = sig;
      }
      const StateTrajectory t = solve_forward_nonlinear(p, 1e-13);
      Vector exact(g.n_nodes());
      for (int i = 0; i < g.n_nodes(); ++i) exact(i) = 0.4 * std::sin(k * g.nodes[i]);
      return weighted_norm(space_weights(g), t.final_state() - exact);
    };
    const double order = std::log2(err(48) / err(96));
    CHECK(order > 1.6);
    CHECK(order < 2.4);
  }

  SUBCASE("amplitude outside the local theory is reported") {
    const SpatialGrid g = build_grid(1.0, 32);
    const TimeGrid tg = build_time_grid(1.0, 16);  // huge dt, huge data
    LinearProblem p = homogeneous_forward(g, tg, BcFamily::FamilyA, 5e3 * compatible_bump(g));
    CHECK_THROWS_WITH_AS(solve_forward_nonlinear(p, 1e-14), doctest::Contains("data too large"),
                         std::runtime_error);
  }
}

TEST_CASE("extract_trace") {
  const SpatialGrid g = build_grid(1.0, 64);
  const TimeGrid tg = build_time_grid(0.5, 32);

  SUBCASE("zero trajectory gives a zero signal with the right index") {
    StateTrajectory z{g, tg, Matrix::Zero(tg.n_samples(), g.n_nodes()), BcFamily::FamilyA};
    const ControlSignal s = extract_trace(z, 2, TracePosition::right());
    CHECK(s.samples.cwiseAbs().maxCoeff() == 0.0);
    CHECK(s.sobolev_index == doctest::Approx(-1.0 / 3.0));
  }

  SUBCASE("homogeneous FamilyA trace y(0,.) vanishes") {
    const Vector y0 = prepared_state(g, BcFamily::FamilyA);
    const StateTrajectory t =
        solve_forward_linear(homogeneous_forward(g, tg, BcFamily::FamilyA, y0));
    const ControlSignal s = extract_trace(t, 0, TracePosition::left());
    CHECK(s.samples.cwiseAbs().maxCoeff() <= 1e-12);
  }

  SUBCASE("position outside the interval is rejected") {
    StateTrajectory z{g, tg, Matrix::Zero(tg.n_samples(), g.n_nodes()), BcFamily::FamilyA};
    CHECK_THROWS_AS(extract_trace(z, 1, TracePosition::interior(2.0)), std::invalid_argument);
    CHECK_THROWS_AS(extract_trace(z, 3, TracePosition::left()), std::invalid_argument);
  }
}

TEST_CASE("Duhamel slab sum matches the single forced solve") {
  const SpatialGrid g = build_grid(1.0, 32);
  const TimeGrid tg = build_time_grid(0.5, 24);
  const CounterRng rng(9);
  Matrix forcing(tg.n_samples(), g.n_nodes());
  for (int m = 0; m <= tg.n_t; ++m)
    for (int i = 0; i < g.n_nodes(); ++i) forcing(m, i) = rng.normal(m * 200 + i);

  LinearProblem p = homogeneous_forward(g, tg, BcFamily::FamilyA, Vector::Zero(g.n_nodes()));
  p.forcing = forcing;
  const Vector direct = solve_forward_linear(p).final_state();

  Vector acc = Vector::Zero(g.n_nodes());
  for (int s = 0; s < tg.n_t; ++s) {
    LinearProblem ps = homogeneous_forward(g, tg, BcFamily::FamilyA, Vector::Zero(g.n_nodes()));
    ps.forcing = Matrix::Zero(tg.n_samples(), g.n_nodes());
    ps.forcing.row(s) = forcing.row(s);
    ps.forcing.row(s + 1) = forcing.row(s + 1);
    if (s > 0) ps.forcing.row(s) *= 0.5;
    if (s + 1 < tg.n_t) ps.forcing.row(s + 1) *= 0.5;
    acc += solve_forward_linear(ps).final_state();
  }
  const double scale = std::max(1.0, direct.cwiseAbs().maxCoeff());
  CHECK((acc - direct).cwiseAbs().maxCoeff() <= 1e-9 * scale);
}
