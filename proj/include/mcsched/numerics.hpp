#pragma once

// Special functions and probability kernels shared by the whole library:
// Lambert-W, the ergodic-rate exponent theta, the minimal delivery cost
// F(theta, P_B), and numerically stable binomial tails for large frame counts.

#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

namespace mcs {

inline constexpr double kLn2 = 0.6931471805599453094;

struct InfeasibleRateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Principal branch W0 of the Lambert-W function, Halley iteration.
/// Residual |W e^W - x| <= 1e-12 * max(1, |x|) over [-1/e, 1e6].
inline double lambert_w0(double x) {
  const double branch = -1.0 / M_E;
  if (x < branch - 1e-14) throw std::domain_error("lambert_w0: x < -1/e");
  if (x < branch) x = branch;
  if (x == 0.0) return 0.0;

  double w;
  if (x < -0.25) {
    // series around the branch point
    double p = std::sqrt(2.0 * (M_E * x + 1.0));
    w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p;
  } else if (x < 3.0) {
    w = x / (1.0 + x);
  } else {
    double l1 = std::log(x), l2 = std::log(l1);
    w = l1 - l2 + l2 / l1;
  }
  for (int it = 0; it < 60; ++it) {
    double ew = std::exp(w);
    double f = w * ew - x;
    if (std::abs(f) <= 1e-14 * std::max(1.0, std::abs(x))) break;
    double denom = ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0);
    if (denom == 0.0) break;
    double step = f / denom;
    w -= step;
    if (w < -1.0) w = -1.0;  // stay on the principal branch
    if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(w))) break;
  }
  return w;
}

/// psi(n) for integer n >= 1: psi(n) = -gamma + sum_{j<n} 1/j.
inline double digamma_int(int n) {
  if (n < 1) throw std::domain_error("digamma_int: n must be >= 1");
  constexpr double euler_gamma = 0.5772156649015328606;
  double s = -euler_gamma;
  for (int j = 1; j < n; ++j) s += 1.0 / j;
  return s;
}

struct CostKernelParams {
  double stbc_rate = 0.5;       // alpha
  double file_bits = 14e6;      // R_F
  double symbol_weight = 1.0;   // w
  double peak_power = 50.12;    // P_B [W]
  int bs_antennas = 8;          // N_T
  double noise_power = 6.3e-13; // sigma_z^2 [W]
  int quadrature_nodes = 64;

  void validate() const {
    if (stbc_rate <= 0 || stbc_rate > 1) throw std::invalid_argument("stbc_rate in (0,1]");
    if (file_bits <= 0 || symbol_weight <= 0 || peak_power <= 0 || noise_power <= 0)
      throw std::invalid_argument("cost kernel params must be positive");
    if (bs_antennas < 1) throw std::invalid_argument("bs_antennas >= 1");
    if (quadrature_nodes < 16) throw std::invalid_argument("quadrature_nodes >= 16");
  }
};

/// Ergodic-rate exponent theta = E[log2(||h||^2 / (N_T sigma^2))] for a
/// receiver with large-scale gain rho*eta. ||h||^2 is Gamma(N_T, gain)
/// distributed, so the expectation has a digamma closed form.
inline double theta_exponent(double gain, const CostKernelParams& p) {
  if (gain <= 0) throw std::domain_error("theta_exponent: gain must be positive");
  return (std::log(gain) + digamma_int(p.bs_antennas) -
          std::log(p.bs_antennas * p.noise_power)) / kLn2;
}

namespace detail {

struct Quadrature {
  std::vector<double> nodes, weights;  // weights normalized by Gamma(alf+1)
};

// Generalized Gauss-Laguerre rule for weight x^alf e^{-x}, Newton iteration
// on the Laguerre recurrence. Weights are divided by Gamma(alf+1) so the
// rule directly averages over a Gamma(alf+1, 1) density.
inline Quadrature make_gauss_laguerre(int n, double alf) {
  Quadrature q;
  q.nodes.resize(n);
  q.weights.resize(n);
  double z = 0.0;
  for (int i = 0; i < n; ++i) {
    if (i == 0) {
      z = (1.0 + alf) * (3.0 + 0.92 * alf) / (1.0 + 2.4 * n + 1.8 * alf);
    } else if (i == 1) {
      z += (15.0 + 6.25 * alf) / (1.0 + 0.9 * alf + 2.5 * n);
    } else {
      double ai = i - 1;
      z += ((1.0 + 2.55 * ai) / (1.9 * ai) +
            1.26 * ai * alf / (1.0 + 3.5 * ai)) *
           (z - q.nodes[i - 2]) / (1.0 + 0.3 * alf);
    }
    double p1 = 0, p2 = 0;
    for (int it = 0; it < 100; ++it) {
      p1 = 1.0;
      p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0 + alf - z) * p2 - (j - 1.0 + alf) * p3) / j;
      }
      double pp = (n * p1 - (n + alf) * p2) / z;
      double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-14 * std::max(1.0, z)) break;
    }
    double pp = (n * p1 - (n + alf) * p2) / z;
    q.nodes[i] = z;
    // weight normalized by Gamma(alf+1): Gamma(alf+n)/(Gamma(n)Gamma(alf+1))
    q.weights[i] = -std::exp(std::lgamma(alf + n) - std::lgamma(double(n)) -
                             std::lgamma(alf + 1.0)) / (pp * n * p2);
  }
  return q;
}

inline const Quadrature& gauss_laguerre(int n, int alf_int) {
  static std::map<std::pair<int, int>, Quadrature> cache;
  static std::mutex mtx;
  std::lock_guard<std::mutex> lock(mtx);
  auto key = std::make_pair(n, alf_int);
  auto it = cache.find(key);
  if (it == cache.end())
    it = cache.emplace(key, make_gauss_laguerre(n, double(alf_int))).first;
  return it->second;
}

}  // namespace detail

/// Per-symbol ergodic rate alpha * E[log2(1 + ||h||^2 P / (N_T sigma^2))]
/// with ||h||^2 ~ Gamma(N_T, gain), via generalized Gauss-Laguerre quadrature.
inline double rate_per_symbol(double power, double gain, const CostKernelParams& p) {
  if (power <= 0 || gain <= 0) throw std::domain_error("rate_per_symbol: power and gain must be positive");
  const auto& q = detail::gauss_laguerre(p.quadrature_nodes, p.bs_antennas - 1);
  const double c = gain * power / (p.bs_antennas * p.noise_power);
  double acc = 0.0;
  for (size_t i = 0; i < q.nodes.size(); ++i)
    acc += q.weights[i] * std::log1p(c * q.nodes[i]);
  return p.stbc_rate * acc / kLn2;
}

/// Exact ergodic rate in bits for N symbols at power P.
inline double ergodic_rate_exact(double power, double symbols, double gain,
                                 const CostKernelParams& p) {
  return symbols * rate_per_symbol(power, gain, p);
}

struct DeliveryPlan {
  double cost = 0;     // (P + w) * N
  double power = 0;    // P
  double symbols = 0;  // N
};

/// Minimum of (P+w)N subject to N*alpha*(log2 P + theta) = R_F and P <= P_B.
/// Closed form through Lambert-W; throws InfeasibleRateError when the file is
/// undeliverable even at peak power under the high-SINR rate expression.
inline DeliveryPlan cost_min_delivery(double theta, const CostKernelParams& p) {
  const double x = std::exp(theta * kLn2 + std::log(p.symbol_weight) - 1.0);
  const double w_val = lambert_w0(x);
  DeliveryPlan out;
  if (w_val > 0.0 && p.symbol_weight / w_val < p.peak_power) {
    out.power = p.symbol_weight / w_val;
    out.symbols = p.file_bits * kLn2 / (p.stbc_rate * (w_val + 1.0));
  } else {
    const double per_sym = std::log2(p.peak_power) + theta;
    if (per_sym <= 0.0)
      throw InfeasibleRateError("cost_min_delivery: rate nonpositive at peak power");
    out.power = p.peak_power;
    out.symbols = p.file_bits / (p.stbc_rate * per_sym);
  }
  out.cost = (out.power + p.symbol_weight) * out.symbols;
  return out;
}

/// Delivery cost with the symbol count corrected against the exact ergodic
/// rate, so the decoding constraint holds at finite SINR. Falls back to peak
/// power when the high-SINR closed form is infeasible.
inline DeliveryPlan delivery_plan_exact(double gain, const CostKernelParams& p) {
  const double theta = theta_exponent(gain, p);
  double power;
  const double x = std::exp(theta * kLn2 + std::log(p.symbol_weight) - 1.0);
  const double w_val = lambert_w0(x);
  if (w_val > 0.0 && p.symbol_weight / w_val < p.peak_power)
    power = p.symbol_weight / w_val;
  else
    power = p.peak_power;
  DeliveryPlan out;
  out.power = power;
  out.symbols = p.file_bits / rate_per_symbol(power, gain, p);
  out.cost = (power + p.symbol_weight) * out.symbols;
  return out;
}

/// Pr(N_R >= k) for N_R ~ Binomial(L, beta), via the regularized incomplete
/// beta function. k = 0 gives 1 and k = L+1 gives 0.
inline double binom_tail(long k, long L, double beta) {
  if (k < 0 || k > L + 1) throw std::domain_error("binom_tail: k out of [0, L+1]");
  if (k <= 0) return 1.0;
  if (k > L) return 0.0;
  if (beta <= 0.0) return 0.0;
  if (beta >= 1.0) return 1.0;
  return boost::math::ibeta(double(k), double(L - k + 1), beta);
}

/// E[max(N_R - M, 0)] = sum_{tau=M+1}^{L} Pr(N_R >= tau), without an O(L)
/// loop: L*beta*Pr(Bin(L-1,beta) >= M) - M*Pr(Bin(L,beta) >= M+1).
inline double binom_excess_mass(long M, long L, double beta) {
  if (M < 0 || M > L) throw std::domain_error("binom_excess_mass: M out of [0, L]");
  if (M == L) return 0.0;
  double t1 = L * beta * binom_tail(M, L - 1, beta);
  double t2 = double(M) * binom_tail(M + 1, L, beta);
  return std::max(0.0, t1 - t2);
}

/// Smallest M with Pr(N_R > M) <= eps (binary search on the tail).
inline long stage_budget(double eps, long L, double beta) {
  if (eps <= 0.0 || eps >= 1.0) throw std::domain_error("stage_budget: eps in (0,1)");
  long lo = 0, hi = L;
  if (binom_tail(1, L, beta) <= eps) return 0;
  while (lo < hi) {
    long mid = lo + (hi - lo) / 2;
    if (binom_tail(mid + 1, L, beta) <= eps)
      hi = mid;
    else
      lo = mid + 1;
  }
  return lo;
}

}  // namespace mcs
