#include "gateaux/integral.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace gateaux;
using V = std::span<const double>;

namespace {

Functional point(std::function<double(double)> g, double alpha = 0.5)
{
  return Functional(PointCylinder{[g = std::move(g)](V v) { return g(v[0]); }, {alpha}});
}

constexpr auto kSurface = MarginalConvention::SurfaceMeasure;
constexpr auto kSlice = MarginalConvention::BallSlice;

} // namespace

TEST(SectionQuadrature, OddIntegrandVanishes)
{
  for (const std::size_t n : {3u, 10u, 1000u}) {
    for (const auto conv : {kSurface, kSlice}) {
      EXPECT_NEAR(section_mean_quadrature(point([](double v) { return v; }), SphereSection(n, 1.4), conv).value, 0.0,
                  1e-12);
    }
  }
}

TEST(SectionQuadrature, SecondMoment)
{
  for (const std::size_t n : {3u, 4u, 5u, 12u, 99u, 1000u, 100000u}) {
    const double R = 0.7;
    const SphereSection s(n, R);
    const auto f = point([](double v) { return v * v; });
    const double nn = static_cast<double>(n);
    EXPECT_NEAR(section_mean_quadrature(f, s, kSurface).value, R * R, 1e-9) << n;
    EXPECT_NEAR(section_mean_quadrature(f, s, kSlice).value, nn * R * R / (nn + 2.0), 1e-9) << n;
  }
}

TEST(SectionQuadrature, SliceRatioFromGammaWallis)
{
  // E[z^2] = rho^2 (1 - W_{n+2}/W_n) under the cos^n weight.
  for (const double n : {6.0, 40.0, 333.0}) {
    const double rho2 = n;
    const double oracle_value = rho2 * (1.0 - oracle::wallis_gamma(n + 2.0) / oracle::wallis_gamma(n));
    const auto f = point([](double v) { return v * v; });
    EXPECT_NEAR(section_mean_quadrature(f, SphereSection(static_cast<std::size_t>(n), 1.0), kSlice).value,
                oracle_value, 1e-9);
  }
}

TEST(SectionQuadrature, FourthMomentAgainstSimpson)
{
  for (const std::size_t n : {5u, 30u, 300u}) {
    const SphereSection s(n, 1.0);
    const double rho = s.euclidean_radius();
    const double nn = static_cast<double>(n);
    const auto f = point([](double v) { return v * v * v * v; });
    EXPECT_NEAR(section_mean_quadrature(f, s, kSurface).value, oracle::marginal_moment(rho, 0.5 * (nn - 3.0), 4), 1e-8);
    EXPECT_NEAR(section_mean_quadrature(f, s, kSlice).value, oracle::marginal_moment(rho, 0.5 * (nn - 1.0), 4), 1e-8);
    EXPECT_NEAR(section_mean_quadrature(f, s, kSurface).value, 3.0 * nn / (nn + 2.0), 1e-9);
    EXPECT_NEAR(section_mean_quadrature(f, s, kSlice).value, 3.0 * nn * nn / ((nn + 2.0) * (nn + 4.0)), 1e-9);
  }
}

TEST(SectionQuadrature, Errors)
{
  const auto f = point([](double v) { return v; });
  EXPECT_THROW(section_mean_quadrature(f, SphereSection(2, 1.0), kSurface), DomainError);
  const Functional two(PointCylinder{[](V v) { return v[0] * v[1]; }, {0.1, 0.9}});
  EXPECT_THROW(section_mean_quadrature(two, SphereSection(10, 1.0), kSlice), DomainError);
  const auto bad = point([](double v) { return std::abs(v) < 0.5 ? std::nan("") : v; });
  EXPECT_THROW(section_mean_quadrature(bad, SphereSection(10, 1.0), kSlice), EvaluationError);
}

TEST(SectionMonteCarlo, ConstantFunctionalHasZeroError)
{
  const Functional f(IntegralCylinder{1, [](V v, V) { return v[0] * v[0]; }});
  for (const std::size_t n : {10u, 100u}) {
    const auto est = section_mean_monte_carlo(f, SphereSection(n, 1.5), 500, 3);
    EXPECT_NEAR(est.value, 2.25, 1e-12);
    EXPECT_LE(est.std_error, 1e-12);
  }
}

TEST(SectionMonteCarlo, OddMeanIsZero)
{
  const auto est = section_mean_monte_carlo(point([](double v) { return v; }, 0.3), SphereSection(50, 1.0), 100000, 4);
  EXPECT_LT(std::abs(est.value), 3.0 * est.std_error);
}

TEST(SectionMonteCarlo, FourthMomentIsTheSurfaceValue)
{
  const std::size_t n = 200;
  const auto est =
      section_mean_monte_carlo(point([](double v) { return v * v * v * v; }), SphereSection(n, 1.0), 400000, 5);
  const double nn = static_cast<double>(n);
  const double surface = 3.0 * nn / (nn + 2.0);
  EXPECT_NEAR(est.value, surface, 3.0 * est.std_error);
}

TEST(SectionMonteCarlo, ErrorsCarrySampleIndex)
{
  const auto f = point([](double v) { return v > 2.5 ? std::nan("") : v; });
  try {
    section_mean_monte_carlo(f, SphereSection(10, 1.0), 100000, 6);
    FAIL() << "expected an EvaluationError";
  } catch (const EvaluationError& e) {
    EXPECT_NE(std::string(e.what()).find("sample "), std::string::npos);
  }
}

TEST(GaussianLimit, Moments)
{
  EXPECT_NEAR(gaussian_limit_mean(point([](double v) { return v * v; }), 1.3), 1.69, 1e-12);
  EXPECT_NEAR(gaussian_limit_mean(point([](double v) { return v * v * v * v; }), 1.3), 3.0 * std::pow(1.3, 4), 1e-10);
  EXPECT_NEAR(gaussian_limit_mean(point([](double v) { return std::cos(v); }), 1.0), std::exp(-0.5), 1e-12);
}

TEST(GaussianLimit, IndependentPoints)
{
  const Functional f(PointCylinder{[](V v) { return v[0] * v[0] * v[1] * v[1]; }, {0.1, 0.7}});
  EXPECT_NEAR(gaussian_limit_mean(f, 2.0), 16.0, 1e-10);
  const Functional same(PointCylinder{[](V v) { return v[0] * v[0] * v[1] * v[1]; }, {0.4, 0.4}});
  EXPECT_NEAR(gaussian_limit_mean(same, 1.0), 3.0, 1e-10);
}

TEST(GaussianLimit, IntegralAndVolterra)
{
  const Functional sq(IntegralCylinder{1, [](V v, V) { return v[0] * v[0]; }});
  EXPECT_NEAR(gaussian_limit_mean(sq, 1.5), 2.25, 1e-12);
  const Functional mean(VolterraSeries{{[](V) { return 1.0; }}});
  EXPECT_NEAR(gaussian_limit_mean(mean, 1.0), 0.0, 1e-14);
  const Functional k2(VolterraSeries{{{}, [](V t) { return t[0] + t[1]; }}});
  // Independent centred values off the diagonal: the limit mean is zero.
  EXPECT_NEAR(gaussian_limit_mean(k2, 1.0, 20, 16), 0.0, 1e-12);
}

TEST(GaussianLimit, BudgetAndDimension)
{
  const Functional five(PointCylinder{[](V) { return 1.0; }, {0.1, 0.3, 0.5, 0.7, 0.9}});
  EXPECT_THROW(gaussian_limit_mean(five, 1.0), BudgetError);
  const Functional p3(IntegralCylinder{3, [](V, V) { return 1.0; }});
  EXPECT_THROW(gaussian_limit_mean(p3, 1.0), BudgetError);
  EXPECT_NEAR(gaussian_limit_mean(p3, 1.0, 8, 8), 1.0, 1e-12);
}

TEST(Convergence, SurfaceSecondMomentIsDegenerate)
{
  const std::vector<std::size_t> ns{10, 30, 100, 300, 1000};
  ConvergenceOptions opt;
  opt.convention = kSurface;
  const auto r = convergence_report(point([](double v) { return v * v; }), 1.2, ns, opt);
  ASSERT_EQ(r.rows.size(), ns.size());
  for (const auto& row : r.rows) {
    EXPECT_LE(row.abs_error, 1e-9);
  }
  EXPECT_FALSE(r.fit.has_value());
  EXPECT_NE(r.fit_note.find("degenerate"), std::string::npos);
}

TEST(Convergence, SliceSecondMoment)
{
  const std::vector<std::size_t> ns{10, 30, 100, 300, 1000};
  ConvergenceOptions opt;
  opt.convention = kSlice;
  const double R = 1.2;
  const auto r = convergence_report(point([](double v) { return v * v; }), R, ns, opt);
  for (const auto& row : r.rows) {
    EXPECT_NEAR(row.abs_error, R * R * 2.0 / (static_cast<double>(row.n) + 2.0), 1e-9);
  }
  ASSERT_TRUE(r.fit.has_value());
  EXPECT_NEAR(r.fit->exponent, -1.0, 0.05);
}

TEST(Convergence, FourthMomentBothConventions)
{
  const std::vector<std::size_t> ns{10, 30, 100, 300, 1000};
  for (const auto conv : {kSurface, kSlice}) {
    ConvergenceOptions opt;
    opt.convention = conv;
    const auto r = convergence_report(point([](double v) { return v * v * v * v; }), 1.0, ns, opt);
    EXPECT_NEAR(r.limit, 3.0, 1e-10);
    ASSERT_TRUE(r.fit.has_value());
    EXPECT_NEAR(r.fit->exponent, -1.0, 0.1);
    EXPECT_GE(r.fit->r_squared, 0.98);
  }
}

TEST(Convergence, MonteCarloRows)
{
  const std::vector<std::size_t> ns{10, 100};
  ConvergenceOptions opt;
  opt.method = MeanMethod::MonteCarlo;
  opt.samples = 20000;
  const auto r = convergence_report(point([](double v) { return v * v; }), 1.0, ns, opt);
  for (const auto& row : r.rows) {
    EXPECT_GT(row.std_error, 0.0);
    EXPECT_NEAR(row.mean, 1.0, 4.0 * row.std_error);
  }
}

TEST(Convergence, RejectsUnsortedSizes)
{
  const std::vector<std::size_t> ns{100, 10, 1000};
  EXPECT_THROW(convergence_report(point([](double v) { return v; }), 1.0, ns, {}), DomainError);
}

TEST(FieldIntegral, PointValueIsOneHalf)
{
  for (const std::size_t n : {1u, 3u, 50u}) {
    const auto est = field_integral(point([](double v) { return v; }, 0.77), n, 20000, 7);
    EXPECT_NEAR(est.value, 0.5, std::max(1e-12, 3.0 * est.std_error)) << n;
  }
}

TEST(FieldIntegral, MeanSquareBruteForce)
{
  const Functional mean_square(VolterraSeries{{{}, [](V) { return 1.0; }}});
  for (const std::size_t n : {1u, 2u, 3u}) {
    // Brute force: 40-point Gauss-Legendre tensor over the cube.
    const auto rule = gauss_legendre(40, 0.0, 1.0);
    double exact = 0.0;
    detail::for_each_tuple(rule.size(), n, [&](std::span<const std::size_t> at) {
      double w = 1.0, m = 0.0;
      for (const auto q : at) {
        w *= rule.weights[q];
        m += rule.nodes[q];
      }
      m /= static_cast<double>(n);
      exact += w * m * m;
    });
    EXPECT_NEAR(exact, 0.25 + 1.0 / (12.0 * static_cast<double>(n)), 1e-12);
    const auto est = field_integral(mean_square, n, 100000, 8);
    EXPECT_NEAR(est.value, exact, 3.0 * est.std_error) << n;
  }
}

TEST(FieldIntegral, LinearMean)
{
  const Functional mean(VolterraSeries{{[](V) { return 1.0; }}});
  const auto est = field_integral(mean, 20, 50000, 9);
  EXPECT_NEAR(est.value, 0.5, 3.0 * est.std_error);
}
