#include <doctest.h>

#include <cmath>
#include <vector>

#include "sre/entropy.hpp"
#include "sre/kernels.hpp"

using namespace sre;

namespace {

const Interval kDomain{-12.0, 12.0};
const double kGaussRate = 0.5 * (3.0 - std::log(4.0));  // 1/2 Gamma(4)

CoefficientSpec wave_spec() { return CoefficientSpec::sinusoidal(2.0, 0.5, 1.0, 0.39, 0.51); }
CoefficientSpec two_spec() { return CoefficientSpec::constant(2.0, 0.49, 0.01); }
CoefficientSpec unit_spec() { return CoefficientSpec::constant(1.0, 0.9, 0.01); }

}  // namespace

TEST_CASE("closed form vanishes identically when the coefficients agree") {
  TransformContext q(wave_spec(), 0.0);
  TransformContext p(wave_spec(), 0.0);
  const auto ensemble = simulate_ensemble(q, 0.0, 8, 4, 200, 0xe1u);
  const EntropyEstimate est = closed_form_functional(q, p, ensemble);
  CHECK(est.value == 0.0);
  CHECK(est.std_error == 0.0);
  CHECK(est.method == EntropyMethod::closed_form);
}

TEST_CASE("closed form is exact for the constant pair") {
  TransformContext q(two_spec(), 0.0);
  TransformContext p(unit_spec(), 0.0);
  const auto ensemble = simulate_ensemble(q, 0.0, 16, 4, 2000, 0xe2u);
  const EntropyEstimate est = closed_form_functional(q, p, ensemble);
  CHECK(est.value == doctest::Approx(kGaussRate).epsilon(1e-14));
  CHECK(est.value == doctest::Approx(0.8068528).epsilon(1e-7));
  CHECK(est.std_error == 0.0);
}

TEST_CASE("swapping constant coefficients maps the rate through Gamma(1/u)") {
  TransformContext q(two_spec(), 0.0);
  TransformContext p(unit_spec(), 0.0);
  const auto fwd = simulate_ensemble(q, 0.0, 8, 2, 50, 0xe3u);
  const auto swapped = simulate_ensemble(p, 0.0, 8, 2, 50, 0xe3u);
  CHECK(closed_form_functional(q, p, fwd).value ==
        doctest::Approx(0.5 * gamma_integrand(4.0)).epsilon(1e-13));
  CHECK(closed_form_functional(p, q, swapped).value ==
        doctest::Approx(0.5 * gamma_integrand(0.25)).epsilon(1e-13));
}

TEST_CASE("closed form matches an fd-marginal quadrature oracle") {
  const auto sigma = wave_spec();
  const auto eta = two_spec();
  TransformContext q(sigma, 0.0);
  TransformContext p(eta, 0.0);
  const auto ensemble = simulate_ensemble(q, 0.0, 16, 16, 10000, 0xe4u);
  const EntropyEstimate est = closed_form_functional(q, p, ensemble);

  // oracle: integrate E[Gamma(sigma(M_s)^2/4)/2] over s with fd marginals,
  // trapezoid in s on 17 nodes (s=0 contributes the value at the start point)
  const int s_nodes = 16;
  std::vector<double> s_times;
  for (int j = 1; j <= s_nodes; ++j) s_times.push_back(static_cast<double>(j) / s_nodes);
  const auto solution =
      solve_fokker_planck(sigma, 1.0, 0.0, FdMesh{-16.0, 16.0, 1600, 320}, s_times);
  REQUIRE(solution.snapshots.size() == s_times.size());

  const auto integrand = [&](double y) {
    const double r = sigma.value(y) / eta.value(y);
    return 0.5 * gamma_integrand(r * r);
  };
  double osum = 0.5 * integrand(0.0);  // s = 0 marginal is the point mass
  for (std::size_t j = 0; j < solution.snapshots.size(); ++j) {
    const auto& table = solution.snapshots[j];
    double expect = 0.0;
    for (int i = 0; i <= table.mesh().n_space; ++i)
      expect += table.values()[static_cast<std::size_t>(i)] * integrand(table.node(i));
    expect *= table.grid_step();
    osum += (j + 1 == solution.snapshots.size() ? 0.5 : 1.0) * expect;
  }
  const double oracle = osum / s_nodes;
  CHECK(std::abs(est.value - oracle) <= 3.0 * est.std_error + 2e-3);
}

TEST_CASE("discrete entropy with exact kernels reproduces the Gaussian rate") {
  TransformContext q(two_spec(), 0.0);
  const ExactConstantKernel kq(2.0), kp(1.0);
  for (int n : {4, 64}) {
    const auto ensemble = simulate_ensemble(q, 0.0, n, 1, 20000, 0xe5u + n);
    const EntropyEstimate est = discrete_entropy_mc(ensemble, kq, kp);
    CHECK(std::abs(est.value - kGaussRate) <= 3.0 * est.std_error);
    CHECK(est.std_error < 0.02);
    CHECK(est.method == EntropyMethod::discrete_mc);
    CHECK(est.value >= -3.0 * est.std_error);  // nonnegativity within noise
  }
}

TEST_CASE("discrete entropy vanishes for identical kernels") {
  TransformContext q(wave_spec(), 0.0);
  TransformContext p(wave_spec(), 0.0);
  const SurrogateKernel kq(q), kp(p);
  const auto ensemble = simulate_ensemble(q, 0.0, 8, 4, 100, 0xe6u);
  const EntropyEstimate est = discrete_entropy_mc(ensemble, kq, kp);
  CHECK(est.value == 0.0);
  CHECK(est.std_error == 0.0);
}

TEST_CASE("surrogate discrete entropy approaches the closed form") {
  TransformContext q(wave_spec(), 0.0);
  TransformContext p(two_spec(), 0.0);
  const auto cert_q = validate_assumption(q.spec(), kDomain, 1001);
  const auto cert_p = validate_assumption(p.spec(), kDomain, 1001);
  const SurrogateKernel kq(q), kp(p);
  const int n = 64;
  const auto ensemble = simulate_ensemble(q, 0.0, n, 16, 10000, 0xe7u);
  const EntropyEstimate discrete = discrete_entropy_mc(ensemble, kq, kp);
  const EntropyEstimate closed = closed_form_functional(q, p, ensemble);
  const double budget = (cert_q.C1 + cert_q.C2 + cert_p.C1 + cert_p.C2) / n;
  CHECK(std::abs(discrete.value - closed.value) <=
        budget + 3.0 * (discrete.std_error + closed.std_error));
  // the closed form is always the smaller of the two quantities
  CHECK(closed.value <= discrete.value + budget + 3.0 * (discrete.std_error + closed.std_error));
}

TEST_CASE("mc kernel backends record their log-bias budget") {
  TransformContext q(wave_spec(), 0.0);
  TransformContext p(two_spec(), 0.0);
  const BridgeMcKernel kq(q, 32, 400, 0xb0b0u);
  const SurrogateKernel kp(p);
  const auto ensemble = simulate_ensemble(q, 0.0, 2, 4, 20, 0xb1b1u);
  const EntropyEstimate est = discrete_entropy_mc(ensemble, kq, kp);
  CHECK(est.inner_samples == 400);
  CHECK(est.log_bias_bound > 0.0);
  CHECK(est.log_bias_bound < 1e-3);  // delta-method bound stays tiny at this scale

  // deterministic backends carry no bias budget
  const SurrogateKernel sq(q);
  const EntropyEstimate clean = discrete_entropy_mc(ensemble, sq, kp);
  CHECK(clean.log_bias_bound == 0.0);
  CHECK(clean.inner_samples == 0);
}

TEST_CASE("telescoping bracket collapses to the constants when coefficients agree") {
  TransformContext q(wave_spec(), 0.0);
  TransformContext p(wave_spec(), 0.0);
  const auto cert = validate_assumption(q.spec(), kDomain, 1001);
  const int n = 16;
  const auto ensemble = simulate_ensemble(q, 0.0, n, 4, 200, 0xe8u);
  const auto [lower, upper] = telescoping_bracket(ensemble, cert, cert, q, p);
  CHECK(lower.value == doctest::Approx(-(cert.C2 + cert.C1) / n).epsilon(1e-12));
  CHECK(upper.value == doctest::Approx((cert.C1 + cert.C2) / n).epsilon(1e-12));
  CHECK(lower.std_error == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(lower.method == EntropyMethod::bracket_lower);
  CHECK(upper.method == EntropyMethod::bracket_upper);
}

TEST_CASE("bracket width is deterministic and halves with n") {
  TransformContext q(two_spec(), 0.0);
  TransformContext p(unit_spec(), 0.0);
  const auto cert_q = validate_assumption(q.spec(), kDomain, 1001);
  const auto cert_p = validate_assumption(p.spec(), kDomain, 1001);
  const double consts = cert_q.C1 + cert_q.C2 + cert_p.C1 + cert_p.C2;

  double widths[2];
  int idx = 0;
  for (int n : {8, 16}) {
    const auto ensemble = simulate_ensemble(q, 0.0, n, 1, 10000, 0xe9u);
    const auto [lower, upper] = telescoping_bracket(ensemble, cert_q, cert_p, q, p);
    widths[idx++] = upper.value - lower.value;
    CHECK(upper.value - lower.value == doctest::Approx(consts / n).epsilon(1e-12));
    // Gaussian case: bracket straddles the closed-form rate
    CHECK(lower.value - 3.0 * lower.std_error <= kGaussRate);
    CHECK(upper.value + 3.0 * upper.std_error >= kGaussRate);
  }
  CHECK(widths[1] / widths[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("bracket straddles the discrete estimate on shared ensembles") {
  TransformContext q(wave_spec(), 0.0);
  TransformContext p(two_spec(), 0.0);
  const auto cert_q = validate_assumption(q.spec(), kDomain, 1001);
  const auto cert_p = validate_assumption(p.spec(), kDomain, 1001);
  const SurrogateKernel kq(q), kp(p);
  for (int n : {8, 32}) {
    const auto ensemble = simulate_ensemble(q, 0.0, n, 8, 5000, 0xeau + n);
    const EntropyEstimate discrete = discrete_entropy_mc(ensemble, kq, kp);
    const auto [lower, upper] = telescoping_bracket(ensemble, cert_q, cert_p, q, p);
    CHECK(lower.value - 3.0 * (lower.std_error + discrete.std_error) <= discrete.value);
    CHECK(discrete.value <= upper.value + 3.0 * (upper.std_error + discrete.std_error));
  }
}

TEST_CASE("telescoping boundary term matches the per-increment sum pathwise") {
  const auto sigma = wave_spec();
  const auto eta = two_spec();
  TransformContext q(sigma, 0.0);
  const auto ensemble = simulate_ensemble(q, 0.0, 16, 4, 20, 0xebu);
  for (const auto& path : ensemble.paths) {
    const auto& v = path.values;
    double incr_sum = 0.0;
    for (std::size_t k = 1; k < v.size(); ++k)
      incr_sum += std::log(sigma.value(v[k - 1]) * eta.value(v[k]) /
                           (sigma.value(v[k]) * eta.value(v[k - 1])));
    const double boundary = std::log(sigma.value(v.front()) * eta.value(v.back()) /
                                     (sigma.value(v.back()) * eta.value(v.front())));
    CHECK(incr_sum == doctest::Approx(boundary).scale(1.0).epsilon(1e-11));
  }
}

TEST_CASE("qv riemann sums hit the known limits") {
  TransformContext unit_ctx(unit_spec(), 0.0);
  const auto brownian = simulate_ensemble(unit_ctx, 0.0, 16, 1, 20000, 0xecu);
  const ScalarEstimate qv1 = qv_riemann_sum(brownian, unit_ctx);
  CHECK(std::abs(qv1.value - 1.0) <= 3.0 * qv1.std_error);

  TransformContext q(two_spec(), 0.0);
  TransformContext p(unit_spec(), 0.0);
  const auto scaled = simulate_ensemble(q, 0.0, 16, 1, 20000, 0xedu);
  const ScalarEstimate qv4 = qv_riemann_sum(scaled, p);
  CHECK(std::abs(qv4.value - 4.0) <= 3.0 * qv4.std_error);
}

TEST_CASE("qv riemann sum matches the time-quadrature oracle") {
  TransformContext q(wave_spec(), 0.0);
  TransformContext p(two_spec(), 0.0);
  const auto ensemble = simulate_ensemble(q, 0.0, 64, 8, 5000, 0xeeu);
  const ScalarEstimate qv = qv_riemann_sum(ensemble, p);
  const ScalarEstimate tq = ratio_time_quadrature(q, p, ensemble);
  CHECK(std::abs(qv.value - tq.value) <= 3.0 * (qv.std_error + tq.std_error));
}

TEST_CASE("convergence study rows are consistent in the Gaussian case") {
  TransformContext q(two_spec(), 0.0);
  TransformContext p(unit_spec(), 0.0);
  const auto cert_q = validate_assumption(q.spec(), kDomain, 1001);
  const auto cert_p = validate_assumption(p.spec(), kDomain, 1001);
  const ExactConstantKernel kq(2.0), kp(1.0);
  const ConvergencePlan plan{q, p, cert_q, cert_p, kq, kp, 0.0, 1, 5000, 0xefu};
  const std::vector<int> n_list{4, 8, 16};
  const auto rows = convergence_study(plan, n_list);
  REQUIRE(rows.size() == 3);
  for (const auto& row : rows) {
    CHECK(std::abs(row.discrete.value - kGaussRate) <= 3.0 * row.discrete.std_error);
    CHECK(row.closed_form.value == doctest::Approx(kGaussRate).epsilon(1e-13));
    CHECK(row.lower.value <= row.upper.value);
  }
  const auto& last = rows.back();
  CHECK(last.lower.value - 3.0 * (last.lower.std_error + last.closed_form.std_error) <=
        last.closed_form.value);
  CHECK(last.closed_form.value <=
        last.upper.value + 3.0 * (last.upper.std_error + last.closed_form.std_error));
}

TEST_CASE("convergence study is flat zero for matching coefficients") {
  TransformContext q(wave_spec(), 0.0);
  TransformContext p(wave_spec(), 0.0);
  const auto cert = validate_assumption(q.spec(), kDomain, 1001);
  const SurrogateKernel kq(q), kp(p);
  const ConvergencePlan plan{q, p, cert, cert, kq, kp, 0.0, 4, 200, 0xf0u};
  const std::vector<int> n_list{4, 8};
  for (const auto& row : convergence_study(plan, n_list)) {
    CHECK(row.discrete.value == 0.0);
    CHECK(row.closed_form.value == 0.0);
    CHECK(std::abs(row.lower.value) <= 2.0 * (cert.C1 + cert.C2) / row.n);
  }
}
