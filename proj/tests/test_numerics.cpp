#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "mcsched/numerics.hpp"

using namespace mcs;

namespace {

double binom_pmf(long j, long L, double beta) {
  double lp = std::lgamma(double(L + 1)) - std::lgamma(double(j + 1)) -
              std::lgamma(double(L - j + 1)) + j * std::log(beta) +
              (L - j) * std::log1p(-beta);
  return std::exp(lp);
}

double tail_direct(long k, long L, double beta) {
  double s = 0;
  for (long j = k; j <= L; ++j) s += binom_pmf(j, L, beta);
  return s;
}

}  // namespace

TEST_CASE("lambert w0 special values and residual") {
  CHECK(lambert_w0(0.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::abs(lambert_w0(M_E) - 1.0) <= 1e-12);
  CHECK(std::abs(lambert_w0(-1.0 / M_E) + 1.0) <= 1e-12);
  // identity W(x e^x) = x on a few spots
  for (double x : {-0.9, -0.5, 0.3, 1.7, 5.0, 12.0})
    CHECK(lambert_w0(x * std::exp(x)) == doctest::Approx(x).epsilon(1e-11));
  // residual sweep over the acceptance interval
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    double t = u(rng);
    double x = (i % 2 == 0) ? -1.0 / M_E + t * (1.0 + 1.0 / M_E)  // [-1/e, 1]
                            : std::exp(t * std::log(1e6));        // [1, 1e6]
    double w = lambert_w0(x);
    CHECK(std::abs(w * std::exp(w) - x) <= 1e-12 * std::max(1.0, std::abs(x)));
  }
}

TEST_CASE("integer digamma") {
  constexpr double euler_gamma = 0.5772156649015328606;
  CHECK(digamma_int(1) == doctest::Approx(-euler_gamma).epsilon(1e-15));
  CHECK(digamma_int(2) == doctest::Approx(1.0 - euler_gamma).epsilon(1e-15));
  // reference value from a 40-digit computation
  CHECK(digamma_int(8) == doctest::Approx(2.0156414779556099965).epsilon(1e-14));
  CHECK_THROWS_AS(digamma_int(0), std::domain_error);
}

TEST_CASE("rate exponent theta") {
  CostKernelParams p;
  p.bs_antennas = 8;
  p.noise_power = 1.0;
  // gain 1, sigma^2 1: theta = (psi(8) - ln 8)/ln 2
  CHECK(theta_exponent(1.0, p) ==
        doctest::Approx(-0.092044035543340601563).epsilon(1e-13));
  // scaling: multiplying the gain by 2^10 adds exactly 10
  CHECK(theta_exponent(1024.0, p) - theta_exponent(1.0, p) ==
        doctest::Approx(10.0).epsilon(1e-13));
  CHECK_THROWS_AS(theta_exponent(0.0, p), std::domain_error);
}

TEST_CASE("per-symbol ergodic rate vs high-precision reference") {
  CostKernelParams p;
  p.bs_antennas = 8;
  p.noise_power = 1.0;
  p.stbc_rate = 0.5;
  // E[log2(1 + X P / 8)]/2, X ~ Gamma(8,1); references computed at 40 digits
  CHECK(rate_per_symbol(0.1, 1.0, p) ==
        doctest::Approx(0.068384124945600084671).epsilon(1e-9));
  CHECK(rate_per_symbol(10.0, 1.0, p) ==
        doctest::Approx(1.6923986101252359229).epsilon(1e-9));
  CHECK(rate_per_symbol(1000.0, 1.0, p) ==
        doctest::Approx(4.9376939727128451686).epsilon(1e-9));
  CostKernelParams p2;
  p2.bs_antennas = 4;
  p2.noise_power = 6.3e-13;
  p2.stbc_rate = 0.75;
  // the 64-node rule carries ~1e-8 relative error on this steeper case
  CHECK(rate_per_symbol(50.0, 2e-12, p2) ==
        doctest::Approx(5.3510030079000031367).epsilon(5e-8));
  p2.quadrature_nodes = 256;
  CHECK(rate_per_symbol(50.0, 2e-12, p2) ==
        doctest::Approx(5.3510030079000031367).epsilon(5e-10));
}

TEST_CASE("high-SINR limit of the exact rate") {
  CostKernelParams p;
  p.bs_antennas = 8;
  p.noise_power = 1.0;
  p.stbc_rate = 0.5;
  // at enormous power the exact rate approaches alpha (log2 P + theta)
  double P = 1e12;
  double approx = p.stbc_rate * (std::log2(P) + theta_exponent(1.0, p));
  CHECK(rate_per_symbol(P, 1.0, p) == doctest::Approx(approx).epsilon(1e-10));
  // and always dominates it (log(1+x) > log x)
  for (double q : {0.1, 1.0, 10.0, 100.0})
    CHECK(rate_per_symbol(q, 1.0, p) >
          p.stbc_rate * (std::log2(q) + theta_exponent(1.0, p)));
}

TEST_CASE("minimum delivery cost closed form") {
  CostKernelParams p;
  p.bs_antennas = 2;
  p.noise_power = 1.0;
  p.stbc_rate = 1.0;
  p.file_bits = 100.0;
  p.symbol_weight = 1.0;
  p.peak_power = 100.0;

  SUBCASE("unconstrained stationary point") {
    double theta = 3.0;
    auto plan = cost_min_delivery(theta, p);
    CHECK(plan.power < p.peak_power);
    // rate constraint holds with equality
    CHECK(plan.symbols * p.stbc_rate * (std::log2(plan.power) + theta) ==
          doctest::Approx(p.file_bits).epsilon(1e-12));
    // interior optimum: d/dP [(P+w)/(log2 P + theta)] = 0
    double lg = std::log2(plan.power) + theta;
    CHECK(lg == doctest::Approx((plan.power + p.symbol_weight) /
                                (plan.power * kLn2)).epsilon(1e-10));
  }

  SUBCASE("peak-power branch") {
    double theta = -6.0;  // forces P* above P_B
    auto plan = cost_min_delivery(theta, p);
    CHECK(plan.power == doctest::Approx(p.peak_power));
    CHECK(plan.symbols * p.stbc_rate * (std::log2(plan.power) + theta) ==
          doctest::Approx(p.file_bits).epsilon(1e-12));
  }

  SUBCASE("infeasible at peak power") {
    CHECK_THROWS_AS(cost_min_delivery(-std::log2(p.peak_power) - 0.1, p),
                    InfeasibleRateError);
  }

  SUBCASE("cost decreasing in theta") {
    double prev = cost_min_delivery(-2.0, p).cost;
    for (double th = -1.5; th < 8.0; th += 0.5) {
      double cur = cost_min_delivery(th, p).cost;
      CHECK(cur < prev);
      prev = cur;
    }
  }
}

TEST_CASE("exact-rate delivery plan meets the decoding constraint") {
  CostKernelParams p;
  p.bs_antennas = 8;
  p.noise_power = 6.3e-13;
  p.stbc_rate = 0.5;
  p.file_bits = 14e6;
  p.peak_power = 50.12;
  for (double gain : {1e-12, 1e-10, 1e-8}) {
    auto plan = delivery_plan_exact(gain, p);
    CHECK(ergodic_rate_exact(plan.power, plan.symbols, gain, p) ==
          doctest::Approx(p.file_bits).epsilon(1e-10));
    CHECK(plan.power <= p.peak_power);
  }
  // deep shadowing at the cell edge: closed form infeasible, exact plan not
  double tiny = 1e-16;
  CHECK_THROWS_AS(cost_min_delivery(theta_exponent(tiny, p), p), InfeasibleRateError);
  auto plan = delivery_plan_exact(tiny, p);
  CHECK(plan.power == doctest::Approx(p.peak_power));
  CHECK(plan.symbols > 0);
}

TEST_CASE("binomial tail vs direct summation") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ub(0.001, 0.999);
  std::uniform_int_distribution<long> uL(1, 1000);
  for (int trial = 0; trial < 200; ++trial) {
    long L = uL(rng);
    double beta = ub(rng);
    std::uniform_int_distribution<long> uk(0, L + 1);
    long k = uk(rng);
    CHECK(binom_tail(k, L, beta) == doctest::Approx(tail_direct(k, L, beta)).epsilon(1e-10));
  }
  CHECK(binom_tail(0, 50, 0.3) == 1.0);
  CHECK(binom_tail(51, 50, 0.3) == 0.0);
  CHECK(binom_tail(3, 50, 0.0) == 0.0);
}

TEST_CASE("binomial excess mass vs direct summation") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> ub(0.001, 0.6);
  for (int trial = 0; trial < 100; ++trial) {
    long L = 1 + long(rng() % 800);
    double beta = ub(rng);
    long M = long(rng() % (L + 1));
    double direct = 0;
    for (long tau = M + 1; tau <= L; ++tau) direct += tail_direct(tau, L, beta);
    CHECK(binom_excess_mass(M, L, beta) ==
          doctest::Approx(direct).epsilon(1e-9).scale(1.0));
  }
  CHECK(binom_excess_mass(10, 10, 0.5) == 0.0);
}

TEST_CASE("stage budget is the smallest sufficient horizon") {
  long L = 100000;
  double beta = 1e-3, eps = 1e-6;
  long M = stage_budget(eps, L, beta);
  CHECK(binom_tail(M + 1, L, beta) <= eps);
  CHECK(binom_tail(M, L, beta) > eps);
  // mean 100, sd ~10: the budget sits a few sd above the mean
  CHECK(M > 100);
  CHECK(M < 200);
  CHECK(stage_budget(0.5, 10, 0.0) == 0);
}
