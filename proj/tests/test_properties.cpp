// Randomized invariants over many generated inputs.

#include "gateaux/gateaux.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace gateaux;
using V = std::span<const double>;

namespace {

StepFunction random_step(Stream& s, std::size_t n, double scale = 1.0)
{
  std::vector<double> v(n);
  for (auto& x : v) {
    x = scale * s.gaussian();
  }
  return StepFunction(std::move(v));
}

} // namespace

TEST(Property, IntegralSquareIsConstantOnEverySection)
{
  const Functional f(IntegralCylinder{1, [](V v, V) { return v[0] * v[0]; }});
  Stream s = derive_stream(SeedPath(100));
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + s() % 300;
    const double R = 0.1 + 3.0 * s.uniform();
    const StepFunction x(sample_sphere(n, R * std::sqrt(static_cast<double>(n)), s));
    ASSERT_TRUE(x.on_section(SphereSection(n, R)));
    ASSERT_NEAR(evaluate(f, x), R * R, 1e-12 * R * R);
  }
}

TEST(Property, RefinementPreservesIntegralFunctionals)
{
  const Functional f(IntegralCylinder{2, [](V v, V a) { return v[0] * v[1] * (1.0 + a[0] * a[1]); }});
  const Functional k(VolterraSeries{{[](V t) { return t[0]; }, [](V t) { return 1.0 + t[0] * t[1]; }}});
  Stream s = derive_stream(SeedPath(101));
  for (int trial = 0; trial < 30; ++trial) {
    const auto x = random_step(s, 1 + s() % 8);
    const std::size_t factor = 2 + s() % 3;
    EXPECT_NEAR(evaluate(f, x), evaluate(f, x.refined(factor)), 1e-12);
    EXPECT_NEAR(evaluate(k, x), evaluate(k, x.refined(factor)), 1e-12);
  }
}

TEST(Property, DifferentialIsLinearInDirection)
{
  const Functional f(IntegralCylinder{1, [](V v, V a) { return std::sin(v[0]) + a[0] * v[0] * v[0] * v[0]; }});
  Stream s = derive_stream(SeedPath(102));
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + s() % 20;
    const auto x = random_step(s, n);
    const auto h1 = random_step(s, n);
    const auto h2 = random_step(s, n);
    const double t = 2.0 * s.gaussian();
    const double lhs = gateaux_differential(f, x, h1.axpy(t, h2));
    const double rhs = gateaux_differential(f, x, h1) + t * gateaux_differential(f, x, h2);
    EXPECT_NEAR(lhs, rhs, 1e-8);
  }
}

TEST(Property, DifferentialOfHomogeneousPolynomial)
{
  // U(x) = int x^3: degree-3 homogeneous, so dU(x; x) = 3 U(x).
  const Functional f(VolterraSeries{{{}, {}, [](V) { return 1.0; }}});
  Stream s = derive_stream(SeedPath(103));
  for (int trial = 0; trial < 20; ++trial) {
    const auto x = random_step(s, 1 + s() % 6);
    EXPECT_NEAR(gateaux_differential(f, x, x), 3.0 * evaluate(f, x), 1e-7 * (1.0 + std::abs(evaluate(f, x))));
  }
}

TEST(Property, SectionMeanScalesHomogeneously)
{
  // g(v) = v^4 is 4-homogeneous: the section mean scales as R^4.
  const Functional f(PointCylinder{[](V v) { return std::pow(v[0], 4); }, {0.2}});
  for (const std::size_t n : {5u, 64u, 700u}) {
    const double base = section_mean_quadrature(f, SphereSection(n, 1.0), MarginalConvention::SurfaceMeasure).value;
    for (const double R : {0.5, 2.0, 3.7}) {
      const double scaled = section_mean_quadrature(f, SphereSection(n, R), MarginalConvention::SurfaceMeasure).value;
      EXPECT_NEAR(scaled, std::pow(R, 4) * base, 1e-10 * std::pow(R, 4));
    }
  }
}

TEST(Property, SliceIsSurfaceOfTwoMoreDimensions)
{
  const Functional f(PointCylinder{[](V v) { return std::cos(v[0]) + v[0] * v[0]; }, {0.6}});
  for (const std::size_t n : {3u, 17u, 250u}) {
    const double nn = static_cast<double>(n);
    // Same Euclidean radius: R' = R sqrt(n / (n + 2)).
    const double slice = section_mean_quadrature(f, SphereSection(n, 1.0), MarginalConvention::BallSlice).value;
    const double surf = section_mean_quadrature(f, SphereSection(n + 2, std::sqrt(nn / (nn + 2.0))),
                                                MarginalConvention::SurfaceMeasure)
                            .value;
    EXPECT_NEAR(slice, surf, 1e-10);
  }
}

TEST(Property, MonteCarloIndependentOfThreads)
{
  const Functional f(PointCylinder{[](V v) { return v[0] * v[1]; }, {0.1, 0.9}});
  for (const unsigned threads : {2u, 5u, 8u}) {
    const auto a = section_mean_monte_carlo(f, SphereSection(12, 1.0), 7777, 55, 1);
    const auto b = section_mean_monte_carlo(f, SphereSection(12, 1.0), 7777, 55, threads);
    EXPECT_EQ(a.value, b.value);
    EXPECT_EQ(a.std_error, b.std_error);
  }
}

TEST(Property, DensityOfComplementSumsToOne)
{
  for (const std::uint64_t m : {2u, 3u, 7u, 10u}) {
    const auto p = predicates::multiple_of(m);
    const std::uint64_t N = 12345;
    const double a = density(p, N).value;
    const double b = density([&](std::uint64_t k) { return !p(k); }, N).value;
    EXPECT_NEAR(a + b, 1.0, 1e-15);
    EXPECT_EQ(a, static_cast<double>(N / m) / static_cast<double>(N));
  }
}

TEST(Property, GreenReproducesRandomHarmonicCombinations)
{
  const auto b = BoundarySpec::sphere(1.0);
  Stream s = derive_stream(SeedPath(104));
  std::vector<fields::NamedField> corpus;
  for (const auto& name : fields::harmonic_names()) {
    corpus.push_back(fields::make(name));
  }
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> c(corpus.size());
    for (auto& v : c) {
      v = s.gaussian();
    }
    auto combine = [&corpus, c](ScalarField FieldSample::*member) {
      return [&corpus, c, member](const Point3& q) {
        double out = 0.0;
        for (std::size_t i = 0; i < corpus.size(); ++i) {
          out += c[i] * (corpus[i].sample.*member)(q);
        }
        return out;
      };
    };
    FieldSample sum;
    sum.value = combine(&FieldSample::value);
    sum.normal_derivative = combine(&FieldSample::normal_derivative);
    Point3 p{s.gaussian(), s.gaussian(), s.gaussian()};
    const double scale = 0.5 * s.uniform() / norm(p);
    for (auto& v : p) {
      v *= scale;
    }
    EXPECT_NEAR(green_reconstruct(b, sum, p), sum.value(p), 1e-4 * (1.0 + std::abs(sum.value(p))));
  }
}
