#pragma once

#include "kdvctrl/grids.hpp"
#include "kdvctrl/solvers.hpp"

namespace kdvctrl {

/// Neumann-cosine eigenbasis on (0, T): mode k is a sampled multiple of
/// cos(k pi t / T) with eigenvalue lambda_k = (k pi / T)^2, orthonormal in the
/// trapezoid-weighted inner product (exactly, by DCT-I orthogonality).
class SpectralBasis {
 public:
  explicit SpectralBasis(const TimeGrid& tgrid);

  const TimeGrid& tgrid() const { return tgrid_; }
  int n_modes() const { return tgrid_.n_t + 1; }
  double eigenvalue(int k) const;

  /// Trapezoid-weighted coefficients of a signal in the basis.
  Vector analyze(const Vector& samples) const;
  Vector synthesize(const Vector& coeffs) const;

  /// Orthonormality defect max_{k,m} |<e_k, e_m> - delta_km|.
  double orthonormality_defect() const;

 private:
  TimeGrid tgrid_;
  Matrix modes_;   // (n_t+1) x (n_t+1), column k = mode k samples
  Vector weights_;
};

/// Spectral H^s(0,T) norm: (sum_k (1+lambda_k)^s c_k^2)^{1/2}.
double h_s_norm(const ControlSignal& sig, double s);
double h_s_norm(const SpectralBasis& basis, const Vector& samples, double s);

enum class DeltaRealization { Cosine, PaddedFourier };

/// Apply (I - d^2/dt^2)^e through the chosen realization. The smoothness
/// bookkeeping shifts the Sobolev index by -2e (applying e = -1/3 to an
/// H^{-1/3} signal yields an H^{1/3}-indexed signal).
ControlSignal apply_delta_power(const ControlSignal& sig, double e,
                                DeltaRealization realization = DeltaRealization::Cosine);

/// Max over sampled interior stations of sum_j ||d^j_x y(x,.)||_{H^{(1-j)/3}}
/// divided by the combined data norm.
double hidden_regularity_ratio(const StateTrajectory& traj, double data_norm);

}  // namespace kdvctrl
