#pragma once

#include <complex>
#include <utility>
#include <vector>

#include "kdvctrl/grids.hpp"

namespace kdvctrl {

using Complex = std::complex<double>;

enum class SetTag { S, N, F };

inline const char* set_tag_name(SetTag t) {
  switch (t) {
    case SetTag::S: return "S";
    case SetTag::N: return "N";
    case SetTag::F: return "F";
  }
  return "?";
}

/// A certified root of one of the transcendental systems behind the critical
/// length sets: exponents (a, b, c) with a + b + c = 0, the shared eigenvalue
/// lambda, the length L with L^2 = -(a^2 + ab + b^2), the chain residual and
/// the smallest singular value of the boundary matrix at (L, a, b).
struct CriticalRoot {
  SetTag set_tag = SetTag::F;
  Complex a, b, c;
  Complex lambda;
  double L = 0.0;
  double residual_norm = 0.0;
  double certification_sigma = 0.0;
};

struct SWitness {
  double L = 0.0;
  int k = 0;
  int l = 0;
  CriticalRoot root;
};

/// All distinct members of S = { 2 pi sqrt((k^2+kl+l^2)/3) : 1 <= k <= l <= k_max },
/// sorted increasing, deduplicated at 1e-12 relative, with (k, l) witnesses.
std::vector<SWitness> enumerate_S(int k_max);

/// Chain residual for N: (a e^a - b e^b, a e^a + (a+b) e^{-(a+b)}).
std::pair<Complex, Complex> residual_N(Complex a, Complex b);

/// Chain residual for F with g(z) = e^z / z^2: (g(a) - g(b), g(a) - g(-(a+b))).
std::pair<Complex, Complex> residual_F(Complex a, Complex b);

struct SearchBox {
  double re_min = -15.0, re_max = 15.0;
  double im_min = -15.0, im_max = 15.0;
};

/// Damped Newton over a seed grid; converged roots are filtered to real
/// positive L^2, deduplicated up to permutation and ordering of (a, b, c),
/// and certified through verify_eigen_deficiency.
std::vector<CriticalRoot> find_critical_lengths(SetTag tag, const SearchBox& box,
                                                int seeds_per_axis, double tol,
                                                int n_workers = 0);

/// Smallest singular value of the 4x3 boundary matrix of the set's
/// eigenproblem at (L, a, b, c), normalized rows per set convention:
///   F: (1, mu, (1+mu^2) e^{mu L}, mu e^{mu L}) at mu_j = a/L, b/L, c/L
///   N: (1, mu, e^{mu L}, mu^2 e^{mu L}) at the reflected mu_j = -a/L, ...
///   S: (1, mu, e^{mu L}, mu e^{mu L}) at mu_j = a/L, ...
/// Also cross-checks that lambda_j = -mu_j - mu_j^3 agree across j.
double verify_eigen_deficiency(double L, const CriticalRoot& root);

/// Largest singular value of the same matrix (scale for deficiency ratios).
double eigen_matrix_scale(double L, const CriticalRoot& root);

/// Assemble a root record (c, lambda, L, residual, certification) from a
/// converged (a, b) pair; throws if L^2 is not real positive.
CriticalRoot make_root(SetTag tag, Complex a, Complex b);

void write_atlas_csv(const std::string& path, const std::vector<CriticalRoot>& roots);

}  // namespace kdvctrl
