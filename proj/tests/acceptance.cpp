// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any
// fails. Usage: acceptance [path-to-gateaux-cli]

#include "gateaux/gateaux.hpp"

#include "oracles.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace gateaux;
using V = std::span<const double>;

namespace {

struct Outcome {
  bool ok = true;
  std::ostringstream detail;

  void check(bool condition, const std::string& what)
  {
    if (!condition) {
      ok = false;
      detail << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void criterion(int id, const std::string& name, double budget_seconds, const std::function<void(Outcome&)>& body)
{
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(out);
  } catch (const std::exception& e) {
    out.ok = false;
    out.detail << " [exception: " << e.what() << "]";
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  out.check(seconds < budget_seconds, "runtime over " + std::to_string(budget_seconds) + " s");
  std::printf("%s %2d %s (%.2f s)%s\n", out.ok ? "PASS" : "FAIL", id, name.c_str(), seconds, out.detail.str().c_str());
  std::fflush(stdout);
  failures += out.ok ? 0 : 1;
}

Functional point(std::function<double(double)> g, double alpha = 0.5)
{
  return Functional(PointCylinder{[g = std::move(g)](V v) { return g(v[0]); }, {alpha}});
}

std::string capture(const std::string& command, int& status)
{
  std::string out;
  FILE* pipe = popen(command.c_str(), "r");
  if (pipe == nullptr) {
    status = -1;
    return out;
  }
  char buf[4096];
  for (std::size_t got; (got = std::fread(buf, 1, sizeof buf, pipe)) > 0;) {
    out.append(buf, got);
  }
  status = pclose(pipe);
  return out;
}

std::string strip_first_line(const std::string& s)
{
  const auto nl = s.find('\n');
  return nl == std::string::npos ? std::string() : s.substr(nl + 1);
}

} // namespace

int main(int argc, char** argv)
{
  const std::string cli = argc > 1 ? argv[1] : "";

  criterion(1, "Wallis recursion and ball volumes", 1.0, [](Outcome& o) {
    double worst_rec = 0.0, worst_vol = 0.0;
    for (std::size_t n = 2; n <= 60; ++n) {
      const double lhs = wallis(n);
      const double rhs = (static_cast<double>(n - 1) / static_cast<double>(n)) * wallis(n - 2);
      worst_rec = std::max(worst_rec, std::abs(lhs - rhs) / rhs);
      worst_rec = std::max(worst_rec, std::abs(lhs - oracle::wallis_gamma(static_cast<double>(n))) / lhs);
    }
    for (std::size_t n = 1; n <= 30; ++n) {
      const double exact = oracle::ball_volume_gamma(static_cast<double>(n));
      worst_vol = std::max(worst_vol, std::abs(ball_volume(n) - exact) / exact);
    }
    o.detail << ": max rel recursion err " << worst_rec << ", max rel volume err " << worst_vol;
    o.check(worst_rec <= 1e-12, "recursion");
    o.check(worst_vol <= 1e-10, "volume");
  });

  criterion(2, "exact constancy of int x^2 on the section", 1.0, [](Outcome& o) {
    const Functional f(IntegralCylinder{1, [](V v, V) { return v[0] * v[0]; }});
    const double R = 1.7;
    for (const std::size_t n : {10u, 100u, 1000u}) {
      const auto est = section_mean_monte_carlo(f, SphereSection(n, R), 200, SeedPath(kDefaultSeed, {2, n}));
      o.detail << " n=" << n << ":" << est.value << "+-" << est.std_error;
      o.check(std::abs(est.value - R * R) <= 1e-12 * R * R, "value at n=" + std::to_string(n));
      o.check(est.std_error <= 1e-12, "std_error at n=" + std::to_string(n));
    }
  });

  criterion(3, "section mean of v^2 (surface R^2, slice nR^2/(n+2))", 1.0, [](Outcome& o) {
    const auto f = point([](double v) { return v * v; });
    const double R = 1.3;
    double worst_surface = 0.0, worst_slice = 0.0, worst_oracle = 0.0;
    for (const std::size_t n : {3u, 4u, 5u, 10u, 57u, 100u, 1000u, 10000u, 100000u}) {
      const double nn = static_cast<double>(n);
      const SphereSection s(n, R);
      const double closed = nn * R * R / (nn + 2.0);
      // Closed form against the Wallis ratio 1 - W_{n+2}/W_n from Gamma
      // values (ill-conditioned beyond n ~ 1e3) and against adaptive Simpson
      // on the slice density.
      if (n <= 1000) {
        const double wallis_ratio = nn * R * R * (1.0 - oracle::wallis_gamma(nn + 2.0) / oracle::wallis_gamma(nn));
        worst_oracle = std::max(worst_oracle, std::abs(closed - wallis_ratio));
      }
      worst_oracle = std::max(worst_oracle, std::abs(closed - oracle::marginal_moment(s.euclidean_radius(), 0.5 * (nn - 1.0), 2)));
      worst_surface = std::max(
          worst_surface, std::abs(section_mean_quadrature(f, s, MarginalConvention::SurfaceMeasure).value - R * R));
      worst_slice =
          std::max(worst_slice, std::abs(section_mean_quadrature(f, s, MarginalConvention::BallSlice).value - closed));
    }
    o.detail << ": max err surface " << worst_surface << ", slice " << worst_slice << ", closed form vs oracles "
             << worst_oracle;
    o.check(worst_surface <= 1e-9, "surface");
    o.check(worst_slice <= 1e-9, "slice");
    o.check(worst_oracle <= 1e-9, "closed form");
  });

  criterion(4, "v^4 convergence rate", 5.0, [](Outcome& o) {
    const std::vector<std::size_t> ns{10, 30, 100, 300, 1000};
    for (const auto conv : {MarginalConvention::SurfaceMeasure, MarginalConvention::BallSlice}) {
      ConvergenceOptions opt;
      opt.convention = conv;
      const auto r = convergence_report(point([](double v) { return v * v * v * v; }), 1.0, ns, opt);
      if (!r.fit) {
        o.check(false, std::string("no fit for ") + to_string(conv));
        continue;
      }
      o.detail << " " << to_string(conv) << ": exponent " << r.fit->exponent << " R2 " << r.fit->r_squared;
      o.check(std::abs(r.limit - 3.0) < 1e-10, "limit");
      o.check(r.fit->exponent >= -1.2 && r.fit->exponent <= -0.8, "exponent");
      o.check(r.fit->r_squared >= 0.98, "R^2");
    }
  });

  criterion(5, "sphere coordinate KS against N(0,1)", 30.0, [](Outcome& o) {
    const std::uint64_t key = SeedPath(kDefaultSeed, {5}).key();
    std::vector<double> ks;
    std::vector<double> z(100000);
    for (const std::size_t n : {4u, 25u, 100u, 400u}) {
      std::vector<double> x(n);
      for (std::uint64_t i = 0; i < z.size(); ++i) {
        Stream s = derive_stream(key, i);
        sample_sphere(x, std::sqrt(static_cast<double>(n)), s);
        z[i] = x[0];
      }
      ks.push_back(ks_distance(z, normal_cdf));
      o.detail << " n=" << n << ":" << ks.back();
    }
    o.check(ks.back() < 0.02, "KS at n=400");
    for (std::size_t i = 1; i < ks.size(); ++i) {
      o.check(ks[i] < ks[i - 1], "strict decrease at step " + std::to_string(i));
    }
  });

  criterion(6, "field integrals", 20.0, [](Outcome& o) {
    const Functional mean_square(VolterraSeries{{{}, [](V) { return 1.0; }}});
    std::uint64_t k = 0;
    for (const std::size_t n : {2u, 10u, 100u}) {
      const auto est = field_integral(mean_square, n, 100000, SeedPath(kDefaultSeed, {6, k++}));
      const double target = 0.25 + 1.0 / (12.0 * static_cast<double>(n));
      o.detail << " (int f)^2 n=" << n << ":" << est.value << "+-" << est.std_error;
      o.check(std::abs(est.value - target) <= 3.0 * est.std_error, "(int f)^2 at n=" + std::to_string(n));
    }
    for (const std::size_t n : {1u, 2u, 10u, 100u, 1000u}) {
      const auto est = field_integral(point([](double v) { return v; }, 0.37), n, 100000, SeedPath(kDefaultSeed, {6, k++}));
      // Small n is integrated exactly (std_error 0); allow rounding there.
      const double tol = std::max(3.0 * est.std_error, 1e-12);
      o.detail << " f(a) n=" << n << ":" << est.value;
      o.check(std::abs(est.value - 0.5) <= tol, "f(alpha) at n=" + std::to_string(n));
    }
  });

  criterion(7, "natural densities", 5.0, [](Outcome& o) {
    const double even = density(predicates::even(), 1000000).value;
    const double squares = density(predicates::square(), 1000000).value;
    const std::vector<std::uint64_t> Ns{1000, 2000, 10000, 20000, 100000, 200000};
    const auto diag = convergence_diagnostic(predicates::leading_digit(1), Ns);
    o.detail << ": evens " << even << ", squares " << squares << ", leading-1 oscillation " << diag.oscillation;
    o.check(even == 0.5, "evens");
    o.check(squares == 1e-3, "squares");
    o.check(diag.oscillation > 0.2, "oscillation");
  });

  criterion(8, "Brownian first passage", 240.0, [](Outcome& o) {
    BrownianConfig config;
    config.dt = 1e-4;
    config.seed = SeedPath(kDefaultSeed, {8}).key();
    double var2 = 0.0, var50 = 0.0;
    for (const std::size_t n : {2u, 10u, 50u}) {
      config.n = n;
      const auto s = first_passage_stats(config, std::sqrt(static_cast<double>(n)), 10000);
      o.detail << " n=" << n << ": E[T]=" << s.mean_T << " Var=" << s.var_T << " censored=" << s.censored;
      o.check(s.mean_T >= 0.95 && s.mean_T <= 1.05, "mean at n=" + std::to_string(n));
      (n == 2 ? var2 : var50) = s.var_T;
    }
    o.check(var50 < var2, "variance decrease");
    config.n = 400;
    config.dt = 1e-3;
    const auto s = first_passage_stats(config, 20.0, 100000);
    const double ks = exit_marginal_ks(s);
    o.detail << " exit KS n=400: " << ks;
    o.check(ks < 0.02, "exit KS");
  });

  criterion(9, "Green decomposition", 10.0, [](Outcome& o) {
    const auto unit = BoundarySpec::sphere(1.0);
    const auto one = fields::make("one");
    double worst_one = 0.0, worst_harmonic = 0.0, worst_identity = 0.0, worst_gauss = 0.0;
    Stream s = derive_stream(SeedPath(kDefaultSeed, {9}));
    std::vector<Point3> points{{0, 0, 0}, {0.5, 0, 0}, {0, -0.5, 0}, {0.2, 0.3, -0.1}};
    for (int i = 0; i < 8; ++i) {
      Point3 p{s.gaussian(), s.gaussian(), s.gaussian()};
      const double scale = 0.5 * s.uniform() / norm(p);
      points.push_back({p[0] * scale, p[1] * scale, p[2] * scale});
    }
    for (const auto& p : points) {
      worst_one = std::max(worst_one, std::abs(green_reconstruct(unit, one.sample, p) - 1.0));
      for (const auto& name : fields::harmonic_names()) {
        const auto f = fields::make(name);
        const auto t = green_terms(unit, f.sample, p);
        worst_harmonic = std::max(worst_harmonic, std::abs(t.value - f.sample.value(p)));
        const double split = single_layer(unit, f.sample.normal_derivative, p, true) +
                             double_layer(unit, f.sample.value, p, true);
        worst_identity = std::max(worst_identity, std::abs(t.value - split));
      }
      worst_gauss = std::max(worst_gauss, std::abs(double_layer(unit, one.sample.value, p, true) - 1.0));
    }
    // Exterior points at |Q| >= 1.5 a; the fixed-order rule degrades within about a/4 of the sphere.
    for (const Point3& q : {Point3{2, 0, 0}, Point3{0, 1.5, 1.5}, Point3{-1.4, 0.5, 0.2}, Point3{0, 0, -1.5}}) {
      worst_gauss = std::max(worst_gauss, std::abs(double_layer(unit, one.sample.value, q, false)));
    }
    o.detail << ": U=1 err " << worst_one << ", harmonic err " << worst_harmonic << ", identity err " << worst_identity
             << ", double-layer(1) err " << worst_gauss;
    o.check(worst_one <= 1e-6, "U = 1");
    o.check(worst_harmonic <= 1e-4, "harmonic corpus");
    o.check(worst_identity <= 1e-12, "identity");
    o.check(worst_gauss <= 1e-6, "double layer of 1");
  });

  criterion(10, "Gateaux differentials", 1.0, [](Outcome& o) {
    const Functional quad(IntegralCylinder{1, [](V v, V) { return v[0] * v[0]; }});
    const Functional volterra(VolterraSeries{{[](V t) { return t[0]; }, [](V) { return 1.0; }}});
    Stream s = derive_stream(SeedPath(kDefaultSeed, {10}));
    double worst_quad = 0.0, worst_volterra = 0.0, worst_linear = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t n = 1 + s() % 16;
      std::vector<double> xv(n), h1v(n), h2v(n);
      for (std::size_t i = 0; i < n; ++i) {
        xv[i] = s.gaussian();
        h1v[i] = s.gaussian();
        h2v[i] = s.gaussian();
      }
      const StepFunction x(xv), h1(h1v), h2(h2v);
      const double dn = static_cast<double>(n);
      double quad_exact = 0.0, x_mean = 0.0, h_mean = 0.0, h_moment = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        quad_exact += 2.0 * xv[i] * h1v[i] / dn;
        x_mean += xv[i] / dn;
        h_mean += h1v[i] / dn;
        h_moment += h1v[i] * (2.0 * static_cast<double>(i) + 1.0) / (2.0 * dn * dn);
      }
      // d/dt [int t x(t) dt + (int x)^2] along h.
      const double volterra_exact = h_moment + 2.0 * x_mean * h_mean;
      worst_quad = std::max(worst_quad, std::abs(gateaux_differential(quad, x, h1) - quad_exact));
      worst_volterra = std::max(worst_volterra, std::abs(gateaux_differential(volterra, x, h1) - volterra_exact));
      for (const Functional* f : {&quad, &volterra}) {
        const double t = s.gaussian();
        const double lhs = gateaux_differential(*f, x, h1.axpy(t, h2));
        const double rhs = gateaux_differential(*f, x, h1) + t * gateaux_differential(*f, x, h2);
        worst_linear = std::max(worst_linear, std::abs(lhs - rhs));
      }
    }
    o.detail << ": quadratic err " << worst_quad << ", Volterra err " << worst_volterra << ", linearity err "
             << worst_linear;
    o.check(worst_quad <= 1e-6, "quadratic");
    o.check(worst_volterra <= 1e-6, "Volterra");
    o.check(worst_linear <= 1e-8, "linearity");
  });

  criterion(11, "reproducibility", 30.0, [&cli](Outcome& o) {
    const Functional f(PointCylinder{[](V v) { return v[0] * v[0] * v[1]; }, {0.25, 0.75}});
    const auto serial = section_mean_monte_carlo(f, SphereSection(64, 1.0), 200000, SeedPath(kDefaultSeed, {11}), 1);
    double worst = 0.0;
    for (const unsigned threads : {2u, 8u}) {
      const auto par = section_mean_monte_carlo(f, SphereSection(64, 1.0), 200000, SeedPath(kDefaultSeed, {11}), threads);
      worst = std::max(worst, std::abs(par.value - serial.value) / std::max(std::abs(serial.value), 1e-300));
      worst = std::max(worst, std::abs(par.std_error - serial.std_error) / serial.std_error);
    }
    o.detail << ": max rel split difference " << worst;
    o.check(worst <= 1e-14, "thread splits");
    if (cli.empty()) {
      o.check(false, "no CLI path given");
      return;
    }
    const std::string command =
        "\"" + cli + "\" section-mean --functional v4 --n 50 --method both --samples 50000 --threads 2";
    int s1 = 0, s2 = 0;
    const std::string a = capture(command, s1);
    const std::string b = capture(command, s2);
    const bool same = s1 == 0 && s2 == 0 && !strip_first_line(a).empty() && strip_first_line(a) == strip_first_line(b);
    o.detail << ", CLI bodies " << (same ? "identical" : "differ");
    o.check(same, "CLI determinism");
  });

  std::printf("%s: %d criteria failed\n", failures == 0 ? "ALL PASS" : "SOME FAILED", failures);
  return failures == 0 ? 0 : 1;
}
