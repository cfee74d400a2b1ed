#include "kdvctrl/critical_lengths.hpp"

#include <algorithm>
#include <optional>
#include <cmath>
#include <fstream>
#include <thread>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "kdvctrl/csv.hpp"

namespace kdvctrl {

namespace {

constexpr double kDegenerateRadius = 1e-3;

bool degenerate(Complex a, Complex b) {
  const Complex c = -(a + b);
  return std::abs(a) < kDegenerateRadius || std::abs(b) < kDegenerateRadius ||
         std::abs(a + b) < kDegenerateRadius || std::abs(a - b) < kDegenerateRadius ||
         std::abs(b - c) < kDegenerateRadius || std::abs(c - a) < kDegenerateRadius;
}

void check_nondegenerate(Complex a, Complex b, const char* who) {
  if (std::abs(a) == 0.0 || std::abs(b) == 0.0 || std::abs(a + b) == 0.0)
    throw std::invalid_argument(std::string(who) + ": degenerate input (a, b, a+b must be nonzero)");
}

using Jacobian = Eigen::Matrix2cd;
using Residual = Eigen::Vector2cd;

Residual res_vec_N(Complex a, Complex b) {
  const auto [r1, r2] = residual_N(a, b);
  return Residual(r1, r2);
}

Jacobian jac_N(Complex a, Complex b) {
  Jacobian j;
  const Complex ea = std::exp(a), eb = std::exp(b), ec = std::exp(-(a + b));
  j(0, 0) = (1.0 + a) * ea;
  j(0, 1) = -(1.0 + b) * eb;
  j(1, 0) = (1.0 + a) * ea + (1.0 - (a + b)) * ec;
  j(1, 1) = (1.0 - (a + b)) * ec;
  return j;
}

Complex g_of(Complex z) { return std::exp(z) / (z * z); }
Complex gp_of(Complex z) { return std::exp(z) * (z - 2.0) / (z * z * z); }

Residual res_vec_F(Complex a, Complex b) {
  const auto [r1, r2] = residual_F(a, b);
  return Residual(r1, r2);
}

Jacobian jac_F(Complex a, Complex b) {
  const Complex c = -(a + b);
  Jacobian j;
  j(0, 0) = gp_of(a);
  j(0, 1) = -gp_of(b);
  j(1, 0) = gp_of(a) + gp_of(c);
  j(1, 1) = gp_of(c);
  return j;
}

bool finite(const Residual& r) {
  return std::isfinite(r(0).real()) && std::isfinite(r(0).imag()) && std::isfinite(r(1).real()) &&
         std::isfinite(r(1).imag());
}

struct NewtonOut {
  Complex a, b;
  double residual;
};

std::optional<NewtonOut> damped_newton(SetTag tag, Complex a, Complex b, double tol) {
  auto res = [tag](Complex x, Complex y) { return tag == SetTag::N ? res_vec_N(x, y) : res_vec_F(x, y); };
  auto jac = [tag](Complex x, Complex y) { return tag == SetTag::N ? jac_N(x, y) : jac_F(x, y); };

  if (degenerate(a, b)) return std::nullopt;
  Residual r = res(a, b);
  if (!finite(r)) return std::nullopt;
  double rn = r.cwiseAbs().maxCoeff();
  constexpr int kMaxIter = 80;
  for (int it = 0; it < kMaxIter; ++it) {
    if (rn < tol) return NewtonOut{a, b, rn};
    Jacobian j = jac(a, b);
    Eigen::Vector2cd d = j.fullPivLu().solve(-r);
    if (!std::isfinite(std::abs(d(0))) || !std::isfinite(std::abs(d(1)))) return std::nullopt;
    double lam = 1.0;
    bool accepted = false;
    for (int h = 0; h < 20; ++h) {
      const Complex an = a + lam * d(0), bn = b + lam * d(1);
      if (!degenerate(an, bn) && std::abs(an) < 700 && std::abs(bn) < 700) {
        const Residual rn2 = res(an, bn);
        if (finite(rn2) && rn2.cwiseAbs().maxCoeff() < rn) {
          a = an;
          b = bn;
          r = rn2;
          rn = rn2.cwiseAbs().maxCoeff();
          accepted = true;
          break;
        }
      }
      lam *= 0.5;
    }
    if (!accepted) return std::nullopt;
  }
  return rn < tol ? std::optional<NewtonOut>(NewtonOut{a, b, rn}) : std::nullopt;
}

Eigen::Matrix<Complex, 4, 3> boundary_matrix(SetTag tag, double L, Complex a, Complex b,
                                              Complex c) {
  const double sign = (tag == SetTag::N) ? -1.0 : 1.0;
  const std::array<Complex, 3> mus{sign * a / L, sign * b / L, sign * c / L};
  Eigen::Matrix<Complex, 4, 3> m;
  for (int j = 0; j < 3; ++j) {
    const Complex mu = mus[j];
    const Complex e = std::exp(mu * L);
    m(0, j) = 1.0;
    m(1, j) = mu;
    switch (tag) {
      case SetTag::F:
        m(2, j) = (1.0 + mu * mu) * e;
        m(3, j) = mu * e;
        break;
      case SetTag::N:
        m(2, j) = e;
        m(3, j) = mu * mu * e;
        break;
      case SetTag::S:
        m(2, j) = e;
        m(3, j) = mu * e;
        break;
    }
  }
  return m;
}

}  // namespace

std::vector<SWitness> enumerate_S(int k_max) {
  if (k_max < 1) throw std::invalid_argument("enumerate_S: k_max must be >= 1");
  std::vector<SWitness> out;
  for (int k = 1; k <= k_max; ++k) {
    for (int l = k; l <= k_max; ++l) {
      SWitness w;
      w.k = k;
      w.l = l;
      w.L = 2.0 * M_PI * std::sqrt((double(k) * k + double(k) * l + double(l) * l) / 3.0);
      const Complex i2pi3(0.0, 2.0 * M_PI / 3.0);
      CriticalRoot r;
      r.set_tag = SetTag::S;
      r.a = i2pi3 * double(2 * k + l);
      r.b = i2pi3 * double(l - k);
      r.c = -(r.a + r.b);
      r.L = w.L;
      const Complex mu = r.a / r.L;
      r.lambda = -mu - mu * mu * mu;
      // S chain: equal exponentials across the triple.
      r.residual_norm = std::max(std::abs(std::exp(r.a) - std::exp(r.b)),
                                 std::abs(std::exp(r.a) - std::exp(r.c)));
      r.certification_sigma = verify_eigen_deficiency(r.L, r);
      w.root = r;
      out.push_back(w);
    }
  }
  std::sort(out.begin(), out.end(), [](const SWitness& x, const SWitness& y) { return x.L < y.L; });
  std::vector<SWitness> dedup;
  for (const auto& w : out)
    if (dedup.empty() || std::abs(w.L - dedup.back().L) > 1e-12 * std::abs(w.L))
      dedup.push_back(w);
  return dedup;
}

std::pair<Complex, Complex> residual_N(Complex a, Complex b) {
  check_nondegenerate(a, b, "residual_N");
  const Complex f1 = a * std::exp(a) - b * std::exp(b);
  const Complex f2 = a * std::exp(a) + (a + b) * std::exp(-(a + b));
  return {f1, f2};
}

std::pair<Complex, Complex> residual_F(Complex a, Complex b) {
  check_nondegenerate(a, b, "residual_F");
  return {g_of(a) - g_of(b), g_of(a) - g_of(-(a + b))};
}

CriticalRoot make_root(SetTag tag, Complex a, Complex b) {
  const Complex c = -(a + b);
  const Complex L2 = -(a * a + a * b + b * b);
  if (std::abs(L2.imag()) > 1e-8 * std::abs(L2) || L2.real() <= 0.0)
    throw std::invalid_argument("make_root: L^2 = -(a^2+ab+b^2) is not real positive");
  CriticalRoot r;
  r.set_tag = tag;
  r.a = a;
  r.b = b;
  r.c = c;
  r.L = std::sqrt(L2.real());
  const Complex mu = ((tag == SetTag::N) ? -a : a) / r.L;
  r.lambda = -mu - mu * mu * mu;
  const auto res = (tag == SetTag::N) ? residual_N(a, b) : residual_F(a, b);
  r.residual_norm = std::max(std::abs(res.first), std::abs(res.second));
  r.certification_sigma = verify_eigen_deficiency(r.L, r);
  return r;
}

std::vector<CriticalRoot> find_critical_lengths(SetTag tag, const SearchBox& box,
                                                int seeds_per_axis, double tol, int n_workers) {
  if (tag == SetTag::S)
    throw std::invalid_argument("find_critical_lengths: S is enumerated in closed form");
  if (seeds_per_axis < 2) throw std::invalid_argument("find_critical_lengths: need >= 2 seeds per axis");

  std::vector<Complex> seeds;
  seeds.reserve(size_t(seeds_per_axis) * seeds_per_axis);
  for (int i = 0; i < seeds_per_axis; ++i) {
    const double re = box.re_min + (box.re_max - box.re_min) * i / (seeds_per_axis - 1);
    for (int j = 0; j < seeds_per_axis; ++j) {
      const double im = box.im_min + (box.im_max - box.im_min) * j / (seeds_per_axis - 1);
      seeds.emplace_back(re, im);
    }
  }

  // Seed b from the structures a root triple can have (self-conjugate up to
  // permutation) plus a generic rotation.
  const auto b_seeds = [](Complex a) {
    return std::array<Complex, 3>{std::conj(a), a * std::exp(Complex(0.0, 2.0 * M_PI / 3.0)),
                                  Complex(-2.0 * a.real(), 0.0)};
  };

  struct Hit {
    Complex a, b;
    double res;
  };
  std::vector<std::optional<Hit>> results(seeds.size() * 3);

  auto run_range = [&](size_t lo, size_t hi) {
    for (size_t s = lo; s < hi; ++s) {
      const Complex a0 = seeds[s];
      const auto bs = b_seeds(a0);
      for (int v = 0; v < 3; ++v) {
        const auto out = damped_newton(tag, a0, bs[v], tol);
        if (out) results[s * 3 + v] = Hit{out->a, out->b, out->residual};
      }
    }
  };

  unsigned workers = n_workers > 0 ? unsigned(n_workers) : std::thread::hardware_concurrency();
  workers = std::max(1u, std::min<unsigned>(workers, 16));
  if (workers <= 1 || seeds.size() < 64) {
    run_range(0, seeds.size());
  } else {
    std::vector<std::thread> pool;
    const size_t chunk = (seeds.size() + workers - 1) / workers;
    for (unsigned wkr = 0; wkr < workers; ++wkr) {
      const size_t lo = wkr * chunk;
      const size_t hi = std::min(seeds.size(), lo + chunk);
      if (lo < hi) pool.emplace_back(run_range, lo, hi);
    }
    for (auto& t : pool) t.join();
  }

  // Merge in seed order (deterministic), filter to real positive L^2, dedup up
  // to permutation of the unordered triple {a, b, c} and conjugation within it.
  std::vector<CriticalRoot> roots;
  auto same_triple = [](const CriticalRoot& x, Complex a, Complex b) {
    const Complex c = -(a + b);
    const std::array<Complex, 3> t1{x.a, x.b, x.c};
    const std::array<Complex, 3> t2{a, b, c};
    int matched = 0;
    for (const Complex& u : t1) {
      for (const Complex& v : t2) {
        if (std::abs(u - v) < 1e-6 * (1.0 + std::abs(u))) {
          ++matched;
          break;
        }
      }
    }
    return matched == 3;
  };
  for (const auto& hit : results) {
    if (!hit) continue;
    const Complex L2 = -(hit->a * hit->a + hit->a * hit->b + hit->b * hit->b);
    if (std::abs(L2.imag()) > 1e-8 * std::abs(L2) || L2.real() <= 1e-6) continue;
    bool dup = false;
    for (const auto& r : roots)
      if (std::abs(r.L - std::sqrt(L2.real())) < 1e-6 && same_triple(r, hit->a, hit->b)) {
        dup = true;
        break;
      }
    if (dup) continue;
    roots.push_back(make_root(tag, hit->a, hit->b));
  }
  std::sort(roots.begin(), roots.end(),
            [](const CriticalRoot& x, const CriticalRoot& y) { return x.L < y.L; });
  return roots;
}

double verify_eigen_deficiency(double L, const CriticalRoot& root) {
  if (!(L > 0.0)) throw std::invalid_argument("verify_eigen_deficiency: L must be positive");
  // The lambda recomputation is meaningful only when (L, a, b) are mutually
  // consistent (the exponents share one cubic). Deliberately inconsistent L
  // is the non-critical control evaluation and just returns sigma_min.
  const Complex l2 = -(root.a * root.a + root.a * root.b + root.b * root.b);
  const bool consistent = std::abs(L * L - l2.real()) <= 1e-6 * L * L &&
                          std::abs(l2.imag()) <= 1e-6 * L * L;
  if (consistent) {
    const double sign = (root.set_tag == SetTag::N) ? -1.0 : 1.0;
    const std::array<Complex, 3> mus{sign * root.a / L, sign * root.b / L, sign * root.c / L};
    const Complex lam0 = -mus[0] - mus[0] * mus[0] * mus[0];
    for (const Complex& mu : mus) {
      const Complex lam = -mu - mu * mu * mu;
      if (std::abs(lam - lam0) > 1e-9 * std::max(1.0, std::abs(lam0)))
        throw std::runtime_error(
            "verify_eigen_deficiency: lambda disagreement across exponents (spurious root)");
    }
  }
  const auto m = boundary_matrix(root.set_tag, L, root.a, root.b, root.c);
  Eigen::JacobiSVD<Eigen::Matrix<Complex, 4, 3>> svd(m);
  return svd.singularValues().minCoeff();
}

double eigen_matrix_scale(double L, const CriticalRoot& root) {
  const auto m = boundary_matrix(root.set_tag, L, root.a, root.b, root.c);
  Eigen::JacobiSVD<Eigen::Matrix<Complex, 4, 3>> svd(m);
  return svd.singularValues().maxCoeff();
}

void write_atlas_csv(const std::string& path, const std::vector<CriticalRoot>& roots) {
  CsvWriter csv(path, {"set_tag", "re_a", "im_a", "re_b", "im_b", "L", "residual_norm",
                       "certification_sigma"});
  for (const auto& r : roots) {
    csv.field(set_tag_name(r.set_tag));
    csv.field(r.a.real());
    csv.field(r.a.imag());
    csv.field(r.b.real());
    csv.field(r.b.imag());
    csv.field(r.L);
    csv.field(r.residual_norm);
    csv.field(r.certification_sigma);
    csv.end_row();
  }
}

}  // namespace kdvctrl
