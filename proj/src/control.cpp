#include "kdvctrl/control.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace kdvctrl {

namespace {

int operator_row_for(Channel c, BcFamily family, int n) {
  if (family == BcFamily::FamilyA) {
    switch (c) {
      case Channel::LeftValue: return 0;
      case Channel::RightCurvature: return n - 1;
      case Channel::RightSlope: return n;
      default: break;
    }
  } else {
    switch (c) {
      case Channel::LeftValue: return 0;
      case Channel::RightSlope: return n - 1;
      case Channel::RightValue: return n;
      default: break;
    }
  }
  throw std::invalid_argument(std::string("channel ") + channel_name(c) +
                              " is not part of family " + family_name(family));
}

}  // namespace

void ControlConfig::validate() const {
  if (active_channels.empty())
    throw std::invalid_argument("ControlConfig: active_channels must be nonempty");
  const auto allowed = family_channels(family);
  for (Channel c : active_channels) {
    if (std::find(allowed.begin(), allowed.end(), c) == allowed.end())
      throw std::invalid_argument(std::string("ControlConfig: channel ") + channel_name(c) +
                                  " does not belong to family " + family_name(family));
    if (std::count(active_channels.begin(), active_channels.end(), c) != 1)
      throw std::invalid_argument("ControlConfig: duplicate active channel");
  }
  for (const auto& [c, e] : smoothing) {
    (void)c;
    if (e != 0.0 && std::abs(std::abs(e) - 1.0 / 3.0) > 1e-12)
      throw std::invalid_argument("ControlConfig: smoothing exponents must be in {-1/3, 0, 1/3}");
  }
  if (regularization_epsilon < 0.0)
    throw std::invalid_argument("ControlConfig: regularization_epsilon must be >= 0");
}

std::string ControlConfig::id() const {
  std::ostringstream os;
  os << family_name(family);
  for (Channel c : active_channels) {
    os << ':' << channel_name(c);
    const double e = smoothing_of(c);
    if (e != 0.0) os << (e > 0 ? "+" : "") << e;
  }
  if (adjoint_mode == AdjointMode::Continuous) os << ":cont";
  return os.str();
}

ControlToFinalMap::ControlToFinalMap(const ControlConfig& config, const SpatialGrid& grid,
                                     const TimeGrid& tgrid)
    : config_(config), grid_(grid), tgrid_(tgrid) {
  config_.validate();
  if (long(grid.n_x) * tgrid.n_t > config.resource_budget)
    throw std::runtime_error("ControlToFinalMap: n_x*n_t = " +
                             std::to_string(long(grid.n_x) * tgrid.n_t) +
                             " exceeds the resource budget " +
                             std::to_string(config.resource_budget));
  const DiscreteOperator op = assemble_operator(grid, config.family, false);
  fwd_ = std::make_shared<ThetaStepper>(op, tgrid.dt);
  space_w_ = space_weights(grid);
  time_w_ = time_weights(tgrid);
  for (size_t k = 0; k < config_.active_channels.size(); ++k)
    channel_rows_[k] = operator_row_for(config_.active_channels[k], config.family, grid.n_x);
  for (Channel c : config_.active_channels)
    if (config_.smoothing_of(c) != 0.0) {
      basis_ = std::make_shared<SpectralBasis>(tgrid);
      break;
    }
}

Vector ControlToFinalMap::apply(const Vector& stacked) const {
  if (stacked.size() != n_controls())
    throw std::invalid_argument("ControlToFinalMap::apply: stacked control length mismatch");
  const int ns = tgrid_.n_samples();
  const auto& rows = fwd_->op().boundary_rows;
  Vector y = Vector::Zero(grid_.n_nodes());
  for (int m = 0; m < tgrid_.n_t; ++m) {
    std::array<double, 3> bc{0.0, 0.0, 0.0};
    for (size_t k = 0; k < config_.active_channels.size(); ++k) {
      const int row = channel_rows_[k];
      const int slot = int(std::find(rows.begin(), rows.end(), row) - rows.begin());
      bc[slot] = stacked(long(k) * ns + m + 1);
    }
    y = fwd_->step(y, bc, nullptr);
  }
  return y;
}

Vector ControlToFinalMap::apply_transpose(const Vector& u) const {
  if (u.size() != grid_.n_nodes())
    throw std::invalid_argument("ControlToFinalMap::apply_transpose: state length mismatch");
  const int ns = tgrid_.n_samples();
  Vector out = Vector::Zero(n_controls());
  Vector v = u;
  for (int m = tgrid_.n_t; m >= 1; --m) {
    const Vector g = fwd_->solve_implicit_transpose(v);
    for (size_t k = 0; k < config_.active_channels.size(); ++k)
      out(long(k) * ns + m) = g(channel_rows_[k]);
    v = fwd_->apply_explicit_transpose(g);
  }
  return out;
}

Vector ControlToFinalMap::observe_continuous(const Vector& psi_T) const {
  LinearProblem p;
  p.grid = grid_;
  p.tgrid = tgrid_;
  p.family = config_.family;
  p.initial_state = psi_T;
  p.direction = Direction::AdjointBackward;
  const StateTrajectory adj = solve_adjoint(p);

  const int ns = tgrid_.n_samples();
  Vector out = Vector::Zero(n_controls());
  for (size_t k = 0; k < config_.active_channels.size(); ++k) {
    ControlSignal tr;
    double sign = 1.0;
    switch (config_.active_channels[k]) {
      case Channel::LeftValue:
        tr = extract_trace(adj, 2, TracePosition::left());
        break;
      case Channel::RightSlope:
        tr = extract_trace(adj, 1, TracePosition::right());
        break;
      case Channel::RightCurvature:
        tr = extract_trace(adj, 0, TracePosition::right());
        sign = -1.0;
        break;
      case Channel::RightValue:
        tr = extract_trace(adj, 2, TracePosition::right());
        sign = -1.0;
        break;
    }
    out.segment(long(k) * ns, ns) = sign * tr.samples;
  }
  return out;
}

Vector ControlToFinalMap::free_final(const Vector& y0) const {
  Vector y = y0;
  const std::array<double, 3> bc{0.0, 0.0, 0.0};
  for (int m = 0; m < tgrid_.n_t; ++m) y = fwd_->step(y, bc, nullptr);
  return y;
}

Vector ControlToFinalMap::apply_channel_weights(const Vector& stacked) const {
  const int ns = tgrid_.n_samples();
  Vector out = stacked;
  for (size_t k = 0; k < config_.active_channels.size(); ++k) {
    const double e = config_.smoothing_of(config_.active_channels[k]);
    if (e == 0.0) continue;
    Vector c = basis_->analyze(stacked.segment(long(k) * ns, ns));
    for (int j = 0; j < c.size(); ++j) c(j) *= std::pow(1.0 + basis_->eigenvalue(j), 2.0 * e);
    out.segment(long(k) * ns, ns) = basis_->synthesize(c);
  }
  return out;
}

Vector ControlToFinalMap::gramian_product(const Vector& z) const {
  Vector functional;
  if (config_.adjoint_mode == AdjointMode::Discrete) {
    Vector bt = apply_transpose(space_w_.cwiseProduct(z));
    const int ns = tgrid_.n_samples();
    for (size_t k = 0; k < config_.active_channels.size(); ++k)
      bt.segment(long(k) * ns, ns) =
          bt.segment(long(k) * ns, ns).cwiseQuotient(time_w_);
    functional = bt;
  } else {
    functional = observe_continuous(z);
  }
  return apply(apply_channel_weights(functional));
}

Vector ControlToFinalMap::controls_from_state(const Vector& z) const {
  Vector functional;
  if (config_.adjoint_mode == AdjointMode::Discrete) {
    Vector bt = apply_transpose(space_w_.cwiseProduct(z));
    const int ns = tgrid_.n_samples();
    for (size_t k = 0; k < config_.active_channels.size(); ++k)
      bt.segment(long(k) * ns, ns) =
          bt.segment(long(k) * ns, ns).cwiseQuotient(time_w_);
    functional = bt;
  } else {
    functional = observe_continuous(z);
  }
  return apply_channel_weights(functional);
}

Matrix ControlToFinalMap::explicit_matrix() const {
  const long work = long(n_controls()) * grid_.n_nodes();
  if (work > config_.resource_budget)
    throw std::runtime_error("ControlToFinalMap::explicit_matrix: requested dense map of " +
                             std::to_string(work) + " entries exceeds the resource budget");
  Matrix b(grid_.n_nodes(), n_controls());
  Vector e = Vector::Zero(n_controls());
  for (int j = 0; j < n_controls(); ++j) {
    e(j) = 1.0;
    b.col(j) = apply(e);
    e(j) = 0.0;
  }
  return b;
}

std::vector<ControlSignal> ControlToFinalMap::unstack(const Vector& stacked) const {
  const int ns = tgrid_.n_samples();
  std::vector<ControlSignal> out;
  for (size_t k = 0; k < config_.active_channels.size(); ++k) {
    ControlSignal sig;
    sig.tgrid = tgrid_;
    sig.channel = config_.active_channels[k];
    sig.samples = stacked.segment(long(k) * ns, ns);
    sig.sobolev_index =
        channel_sobolev_index(sig.channel) - 2.0 * config_.smoothing_of(sig.channel);
    out.push_back(std::move(sig));
  }
  return out;
}

Gramian assemble_gramian(const ControlConfig& config, const SpatialGrid& grid,
                         const TimeGrid& tgrid) {
  Gramian g;
  g.config = config;
  g.grid = grid;
  g.tgrid = tgrid;
  g.map = std::make_shared<ControlToFinalMap>(config, grid, tgrid);
  const int n1 = grid.n_nodes();
  const Vector w = space_weights(grid);

  const int K = std::max(4, std::min(grid.n_x / 3,
                                     int(std::lround(config.filter_kappa * grid.length_L / M_PI))));
  g.filter_basis.resize(n1, K);
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < n1; ++i)
      g.filter_basis(i, k) = std::cos(k * M_PI * double(i) / grid.n_x);

  const bool dense_ok = n1 <= 160;
  if (dense_ok) {
    g.bilinear.resize(n1, n1);
    Vector e = Vector::Zero(n1);
    for (int j = 0; j < n1; ++j) {
      e(j) = 1.0;
      g.bilinear.col(j) = w.cwiseProduct(g.map->gramian_product(e));
      e(j) = 0.0;
    }
    const double scale = g.bilinear.cwiseAbs().maxCoeff();
    g.symmetry_defect =
        scale == 0.0 ? 0.0 : (g.bilinear - g.bilinear.transpose()).cwiseAbs().maxCoeff() / scale;
    // weighted spectrum: eig of M^{-1/2} Gt M^{-1/2}
    const Vector wi = w.cwiseSqrt().cwiseInverse();
    Matrix s = wi.asDiagonal() * g.bilinear * wi.asDiagonal();
    s = 0.5 * (s + s.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(s);
    g.min_eigenvalue = es.eigenvalues().minCoeff();
    g.eig_vectors = es.eigenvectors();
    g.eig_values = es.eigenvalues();
    g.filter_block = g.filter_basis.transpose() * g.bilinear * g.filter_basis;
  } else {
    g.filter_block.resize(K, K);
    for (int k = 0; k < K; ++k) {
      const Vector col = w.cwiseProduct(g.map->gramian_product(g.filter_basis.col(k)));
      g.filter_block.col(k) = g.filter_basis.transpose() * col;
    }
  }
  g.filter_block = 0.5 * (g.filter_block + g.filter_block.transpose()).eval();
  g.filter_mass = g.filter_basis.transpose() * w.asDiagonal() * g.filter_basis;

  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(g.filter_block, g.filter_mass);
  g.sigma_min_filtered = ges.eigenvalues().minCoeff();
  g.norm_scale = ges.eigenvalues().maxCoeff();
  return g;
}

CgOutcome conjugate_gradient(const std::function<Vector(const Vector&)>& apply, const Vector& rhs,
                             double tol, int max_iterations, int patience) {
  CgOutcome out;
  out.x = Vector::Zero(rhs.size());
  const double b0 = rhs.norm();
  if (b0 == 0.0) return out;
  Vector r = rhs;
  Vector p = r;
  double rs = r.squaredNorm();
  Vector best = out.x;
  double best_rn = std::sqrt(rs);
  double window_rn = best_rn;
  int since_improved = 0;
  int it = 0;
  while (it < max_iterations) {
    const double rn = std::sqrt(rs);
    if (rn < best_rn) {
      best_rn = rn;
      best = out.x;
    }
    // stall: no meaningful residual progress over a whole window
    if (++since_improved >= patience) {
      if (best_rn > 0.999 * window_rn) {
        out.stalled = true;
        break;
      }
      window_rn = best_rn;
      since_improved = 0;
    }
    if (rn <= tol * b0) break;
    const Vector ap = apply(p);
    const double denom = p.dot(ap);
    if (denom <= 0.0) {
      out.stalled = true;
      break;
    }
    const double alpha = rs / denom;
    out.x += alpha * p;
    r -= alpha * ap;
    const double rs2 = r.squaredNorm();
    p = r + (rs2 / rs) * p;
    rs = rs2;
    ++it;
  }
  out.iterations = it;
  if (best_rn < std::sqrt(rs)) out.x = best;
  out.relative_residual = std::min(best_rn, std::sqrt(rs)) / b0;
  return out;
}

SynthesisResult synthesize_control(const Gramian& gramian, const Vector& y0, const Vector& yT,
                                   double cg_tol, int max_iterations) {
  const auto& map = *gramian.map;
  const Vector w = map.space_w();
  const Vector free_T = map.free_final(y0);
  const Vector defect = yT - free_T;

  SynthesisResult res;
  res.gramian_sigma_min = gramian.sigma_min_filtered;

  Vector z;
  const bool spectral = gramian.config.solve_mode == GramianSolve::Auto &&
                        gramian.bilinear.size() != 0;
  if (gramian.config.solve_mode == GramianSolve::FilteredProjection) {
    const Matrix& V = gramian.filter_basis;
    const Vector rhs = V.transpose() * w.cwiseProduct(defect);
    Matrix block = gramian.filter_block;
    if (gramian.config.regularization_epsilon > 0.0)
      block += gramian.config.regularization_epsilon * gramian.filter_mass;
    z = V * block.ldlt().solve(rhs);
  } else if (spectral) {
    // z = M^{-1/2} U diag(1/(sigma + eps)) U^T M^{1/2} d, with the numerically
    // null part of the spectrum cut at the machine floor.
    const Vector ws = w.cwiseSqrt();
    const Vector c = gramian.eig_vectors.transpose() * ws.cwiseProduct(defect);
    const double lam_max = gramian.eig_values.cwiseAbs().maxCoeff();
    const double floor = 1e-13 * std::max(lam_max, 1e-300);
    const double eps = gramian.config.regularization_epsilon;
    Vector amp = Vector::Zero(c.size());
    for (int i = 0; i < c.size(); ++i)
      if (gramian.eig_values(i) > floor) amp(i) = c(i) / (gramian.eig_values(i) + eps);
    z = (gramian.eig_vectors * amp).cwiseQuotient(ws);
    res.cg_residual =
        defect.norm() == 0.0
            ? 0.0
            : (gramian.bilinear * z - w.cwiseProduct(defect)).norm() / w.cwiseProduct(defect).norm();
  } else {
    const Vector rhs = w.cwiseProduct(defect);
    const double eps = gramian.config.regularization_epsilon;
    std::function<Vector(const Vector&)> apply;
    if (gramian.bilinear.size() != 0) {
      apply = [&](const Vector& v) -> Vector {
        Vector out = gramian.bilinear * v;
        if (eps > 0.0) out += eps * w.cwiseProduct(v);
        return out;
      };
    } else {
      apply = [&](const Vector& v) -> Vector {
        Vector out = w.cwiseProduct(map.gramian_product(v));
        if (eps > 0.0) out += eps * w.cwiseProduct(v);
        return out;
      };
    }
    const int cap = max_iterations > 0 ? max_iterations : 30 * gramian.grid.n_nodes();
    const CgOutcome cg = conjugate_gradient(apply, rhs, cg_tol, cap);
    z = cg.x;
    res.cg_iterations = cg.iterations;
    res.cg_residual = cg.relative_residual;
    res.stalled = cg.stalled;
  }

  const Vector stacked = map.controls_from_state(z);
  res.controls = map.unstack(stacked);

  // Independent replay through the public solver path.
  LinearProblem p;
  p.grid = gramian.grid;
  p.tgrid = gramian.tgrid;
  p.family = gramian.config.family;
  p.initial_state = y0;
  const auto chans = family_channels(gramian.config.family);
  for (const auto& sig : res.controls)
    for (int k = 0; k < 3; ++k)
      if (chans[k] == sig.channel) p.boundary_data[k] = sig;
  const StateTrajectory replay = solve_forward_linear(p);
  res.achieved_final = replay.final_state();

  const double floor = 1e-14 * std::max(1.0, gramian.norm_scale);
  const double denom = std::max({weighted_norm(w, yT), weighted_norm(w, y0), floor});
  res.relative_error = weighted_norm(w, res.achieved_final - yT) / denom;
  return res;
}

double observability_constant(const Gramian& gramian) {
  const double tol = 1e-14 * std::max(1.0, gramian.norm_scale);
  if (gramian.sigma_min_filtered <= tol) return std::numeric_limits<double>::infinity();
  return 1.0 / std::sqrt(gramian.sigma_min_filtered);
}

}  // namespace kdvctrl
