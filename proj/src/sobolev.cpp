#include "kdvctrl/sobolev.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace kdvctrl {

SpectralBasis::SpectralBasis(const TimeGrid& tgrid) : tgrid_(tgrid) {
  const int n = tgrid.n_t;
  const double T = tgrid.horizon_T;
  weights_ = time_weights(tgrid);
  modes_.resize(n + 1, n + 1);
  for (int k = 0; k <= n; ++k) {
    const double amp = (k == 0 || k == n) ? std::sqrt(1.0 / T) : std::sqrt(2.0 / T);
    for (int j = 0; j <= n; ++j) modes_(j, k) = amp * std::cos(M_PI * k * j / n);
  }
}

double SpectralBasis::eigenvalue(int k) const {
  const double w = k * M_PI / tgrid_.horizon_T;
  return w * w;
}

Vector SpectralBasis::analyze(const Vector& samples) const {
  if (samples.size() != modes_.rows())
    throw std::invalid_argument("SpectralBasis: signal length does not match the basis grid");
  return modes_.transpose() * weights_.cwiseProduct(samples);
}

Vector SpectralBasis::synthesize(const Vector& coeffs) const { return modes_ * coeffs; }

double SpectralBasis::orthonormality_defect() const {
  Matrix g = modes_.transpose() * weights_.asDiagonal() * modes_;
  g -= Matrix::Identity(g.rows(), g.cols());
  return g.cwiseAbs().maxCoeff();
}

double h_s_norm(const SpectralBasis& basis, const Vector& samples, double s) {
  if (std::abs(s) > 1.0) throw std::invalid_argument("h_s_norm: |s| must be <= 1");
  const Vector c = basis.analyze(samples);
  double acc = 0.0;
  for (int k = 0; k < c.size(); ++k) acc += std::pow(1.0 + basis.eigenvalue(k), s) * c(k) * c(k);
  return std::sqrt(acc);
}

double h_s_norm(const ControlSignal& sig, double s) {
  SpectralBasis basis(sig.tgrid);
  return h_s_norm(basis, sig.samples, s);
}

namespace {

// Zero-padded Fourier realization: extend by zeros, weight the DFT modes by
// (1 + omega^2)^e, restrict back. The multiplier kernel decays like e^{-|t|},
// so the padding has to cover several absolute time units, not a multiple of
// the window. Direct O(n^2) transform.
Vector padded_fourier_delta(const Vector& samples, double dt, double e) {
  const int n = static_cast<int>(samples.size());
  const int np = n + static_cast<int>(std::ceil(16.0 / dt));
  std::vector<std::complex<double>> hat(np, {0.0, 0.0});
  for (int k = 0; k < np; ++k) {
    std::complex<double> acc{0.0, 0.0};
    for (int j = 0; j < n; ++j) {
      const double ph = -2.0 * M_PI * k * j / np;
      acc += samples(j) * std::complex<double>(std::cos(ph), std::sin(ph));
    }
    const int ks = (k <= np / 2) ? k : k - np;
    const double omega = 2.0 * M_PI * ks / (np * dt);
    hat[k] = acc * std::pow(1.0 + omega * omega, e);
  }
  Vector out(n);
  for (int j = 0; j < n; ++j) {
    std::complex<double> acc{0.0, 0.0};
    for (int k = 0; k < np; ++k) {
      const double ph = 2.0 * M_PI * k * j / np;
      acc += hat[k] * std::complex<double>(std::cos(ph), std::sin(ph));
    }
    out(j) = acc.real() / np;
  }
  return out;
}

}  // namespace

ControlSignal apply_delta_power(const ControlSignal& sig, double e,
                                DeltaRealization realization) {
  ControlSignal out = sig;
  out.sobolev_index = sig.sobolev_index - 2.0 * e;
  if (realization == DeltaRealization::Cosine) {
    SpectralBasis basis(sig.tgrid);
    Vector c = basis.analyze(sig.samples);
    for (int k = 0; k < c.size(); ++k) c(k) *= std::pow(1.0 + basis.eigenvalue(k), e);
    out.samples = basis.synthesize(c);
  } else {
    out.samples = padded_fourier_delta(sig.samples, sig.tgrid.dt, e);
  }
  return out;
}

double hidden_regularity_ratio(const StateTrajectory& traj, double data_norm) {
  const Vector w = space_weights(traj.grid);
  double traj_scale = 0.0;
  for (int m = 0; m <= traj.tgrid.n_t; ++m)
    traj_scale = std::max(traj_scale, weighted_norm(w, traj.row(m)));
  if (!(data_norm > 0.0)) {
    if (traj_scale == 0.0) return 0.0;
    throw std::invalid_argument("hidden_regularity_ratio: zero data norm with nonzero trajectory");
  }
  SpectralBasis basis(traj.tgrid);
  const double L = traj.grid.length_L;
  double worst = 0.0;
  for (double frac : {0.25, 0.5, 0.75}) {
    double acc = 0.0;
    for (int j = 0; j <= 2; ++j) {
      const ControlSignal tr = extract_trace(traj, j, TracePosition::interior(frac * L));
      acc += h_s_norm(basis, tr.samples, (1.0 - j) / 3.0);
    }
    worst = std::max(worst, acc);
  }
  return worst / data_norm;
}

}  // namespace kdvctrl
