#pragma once

/// Experiment harness behind the `gateaux` command line tool: run
/// configuration, `key = value` config files, built-in functional corpus, and
/// CSV/JSON report writing.
///
/// CSV layout: one `# ...` preamble line (command, wall-clock time), then the
/// header row
///   experiment,<parameter keys, sorted>,metric,value,std_error,seconds
/// Everything after the preamble depends only on the run configuration.

#include "gateaux/gateaux.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace gateaux::cli {

enum ExitCode : int { kSuccess = 0, kUsage = 2, kNumeric = 3 };

inline constexpr const char* kSeedEnvVar = "GATEAUX_SEED";

class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class Format { Csv, Json };

struct ParamSpec {
  std::string key;
  std::string default_value;
  std::string help;
};

/// Parameters accepted by each command, with defaults.
inline const std::map<std::string, std::vector<ParamSpec>>& command_table()
{
  static const std::map<std::string, std::vector<ParamSpec>> table{
      {"section-mean",
       {{"functional", "v2", "v, v2, v4, cos, int-square, mean, mean-square, volterra"},
        {"n", "100", "section size"},
        {"R", "1", "L2 radius"},
        {"alpha", "0.5", "evaluation point of point functionals"},
        {"convention", "both", "surface, slice or both"},
        {"method", "quadrature", "quadrature, mc or both"},
        {"order", "64", "Gauss-Legendre order"},
        {"samples", "100000", "Monte Carlo samples"},
        {"kernel", "", "kernel grid files for volterra, ';'-separated"},
        {"threads", "1", "worker threads (0 = all cores)"}}},
      {"limit",
       {{"functional", "v2", "functional name"},
        {"R", "1", "L2 radius"},
        {"alpha", "0.5", "evaluation point of point functionals"},
        {"hermite", "40", "Gauss-Hermite order"},
        {"order", "64", "Gauss-Legendre order for alpha integrals"},
        {"kernel", "", "kernel grid files for volterra"}}},
      {"converge",
       {{"functional", "v4", "functional name"},
        {"R", "1", "L2 radius"},
        {"n", "10,30,100,300,1000", "increasing section sizes"},
        {"alpha", "0.5", "evaluation point of point functionals"},
        {"convention", "surface", "surface or slice (quadrature only)"},
        {"method", "quadrature", "quadrature or mc"},
        {"order", "64", "Gauss-Legendre order"},
        {"hermite", "40", "Gauss-Hermite order"},
        {"samples", "100000", "Monte Carlo samples per n"},
        {"kernel", "", "kernel grid files for volterra"},
        {"threads", "1", "worker threads"}}},
      {"field",
       {{"functional", "mean-square", "functional name"},
        {"n", "2,10,100", "partition sizes"},
        {"alpha", "0.5", "evaluation point of point functionals"},
        {"samples", "100000", "Monte Carlo samples"},
        {"kernel", "", "kernel grid files for volterra"},
        {"threads", "1", "worker threads"}}},
      {"density",
       {{"set", "even", "even, multiple:<m>, square, squarefree, leading-digit:<d>"},
        {"N", "1000000", "horizon"},
        {"checkpoints", "0", "geometric checkpoints to report"},
        {"N-list", "", "increasing horizons for the oscillation diagnostic"}}},
      {"passage",
       {{"n", "10", "dimensions, comma-separated"},
        {"dt", "1e-4", "time step"},
        {"horizon", "5", "censoring time"},
        {"reps", "10000", "replications"},
        {"radius", "", "passage radius (default sqrt(n))"},
        {"method", "auto", "auto, full or radial"},
        {"times-out", "", "write per-replication passage times to this CSV"},
        {"threads", "1", "worker threads"}}},
      {"wiener",
       {{"modes", "1024", "number of Haar/Schauder modes"},
        {"grid", "1025", "grid points on [0, 1]"},
        {"samples", "1000", "sampled paths"}}},
      {"green",
       {{"function", "x", "one, x, y, z, xy, x2-y2, 2z2-x2-y2, r2"},
        {"a", "1", "sphere radius"},
        {"P", "0.2,0,0", "interior point x,y,z"},
        {"order", "32", "surface rule order"},
        {"shells", "32", "radial nodes of the volume term"}}},
      {"selftest", {}},
  };
  return table;
}

inline const std::map<std::string, std::string>& command_summaries()
{
  static const std::map<std::string, std::string> summaries{
      {"section-mean", "mean of a functional over one section, by quadrature and/or Monte Carlo"},
      {"limit", "Gaussian limit of the section means"},
      {"converge", "section means along increasing n with a log-log error fit"},
      {"field", "mean over step functions with independent uniform cell values"},
      {"density", "natural density of an integer set"},
      {"passage", "first passage of Brownian motion through the sphere of radius sqrt(n)"},
      {"wiener", "Wiener paths from the Haar/Schauder series"},
      {"green", "Green's representation of a test field inside a sphere"},
      {"selftest", "fast invariant checks, one PASS/FAIL line each"},
  };
  return summaries;
}

/// Keys accepted everywhere besides the command's own parameters.
inline const std::vector<std::string>& global_keys()
{
  static const std::vector<std::string> keys{"seed", "out", "format", "timing"};
  return keys;
}

struct RunConfig {
  std::string command;
  std::map<std::string, std::string> params;
  std::uint64_t seed = kDefaultSeed;
  std::string out;
  Format format = Format::Csv;
  bool timing = false;

  const std::string& get(const std::string& key) const
  {
    const auto it = params.find(key);
    if (it == params.end()) {
      throw UsageError("missing parameter '" + key + "'");
    }
    return it->second;
  }
};

// ---------------------------------------------------------------------------
// Parsing helpers
// ---------------------------------------------------------------------------

inline std::string trim(std::string_view s)
{
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

inline double parse_double(const std::string& key, const std::string& text)
{
  const std::string t = trim(text);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(v)) {
    throw UsageError("parameter '" + key + "': '" + text + "' is not a number");
  }
  return v;
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& text)
{
  const double v = parse_double(key, text);
  if (v < 0.0 || v != std::floor(v) || v > 1.8e19) {
    throw UsageError("parameter '" + key + "': '" + text + "' is not a nonnegative integer");
  }
  return static_cast<std::uint64_t>(v);
}

inline std::vector<std::string> split(const std::string& text, char sep)
{
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) {
      out.push_back(item);
    }
  }
  return out;
}

inline std::vector<double> parse_double_list(const std::string& key, const std::string& text)
{
  std::vector<double> out;
  for (const auto& item : split(text, ',')) {
    out.push_back(parse_double(key, item));
  }
  if (out.empty()) {
    throw UsageError("parameter '" + key + "' is empty");
  }
  return out;
}

inline std::vector<std::uint64_t> parse_uint_list(const std::string& key, const std::string& text)
{
  std::vector<std::uint64_t> out;
  for (const auto& item : split(text, ',')) {
    out.push_back(parse_uint(key, item));
  }
  if (out.empty()) {
    throw UsageError("parameter '" + key + "' is empty");
  }
  return out;
}

inline std::size_t edit_distance(std::string_view a, std::string_view b)
{
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) {
    row[j] = j;
  }
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

inline std::vector<std::string> allowed_keys(const std::string& command)
{
  const auto it = command_table().find(command);
  if (it == command_table().end()) {
    throw UsageError("unknown command '" + command + "'");
  }
  std::vector<std::string> keys = global_keys();
  for (const auto& spec : it->second) {
    keys.push_back(spec.key);
  }
  return keys;
}

inline void check_key(const std::string& command, const std::string& key)
{
  const auto keys = allowed_keys(command);
  if (std::find(keys.begin(), keys.end(), key) != keys.end()) {
    return;
  }
  std::string best;
  std::size_t best_distance = 3;
  for (const auto& k : keys) {
    const auto d = edit_distance(key, k);
    if (d < best_distance) {
      best_distance = d;
      best = k;
    }
  }
  throw UsageError("unknown key '" + key + "' for command '" + command + "'" +
                   (best.empty() ? std::string() : " (did you mean '" + best + "'?)"));
}

/// Parses `key = value` lines. Blank lines and lines starting with '#' are
/// ignored. Duplicate keys are errors.
inline std::map<std::string, std::string> parse_config_text(std::string_view text)
{
  std::map<std::string, std::string> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') {
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(number) + ": expected 'key = value'");
    }
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) {
      throw UsageError("config line " + std::to_string(number) + ": empty key");
    }
    if (!out.emplace(key, value).second) {
      throw UsageError("config line " + std::to_string(number) + ": duplicate key '" + key + "'");
    }
  }
  return out;
}

inline std::map<std::string, std::string> read_config_file(const std::string& path)
{
  std::ifstream in(path);
  if (!in) {
    throw UsageError("cannot open config file '" + path + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

/// Builds a RunConfig from layered sources; later layers win:
/// defaults < environment seed < config file < command-line flags.
inline RunConfig make_run_config(const std::string& command, const std::map<std::string, std::string>& file_values,
                                 const std::map<std::string, std::string>& flag_values,
                                 std::optional<std::string> env_seed = std::nullopt)
{
  const auto it = command_table().find(command);
  if (it == command_table().end()) {
    throw UsageError("unknown command '" + command + "'");
  }
  RunConfig config;
  config.command = command;
  for (const auto& spec : it->second) {
    config.params[spec.key] = spec.default_value;
  }
  std::map<std::string, std::string> merged;
  if (env_seed && !env_seed->empty()) {
    merged["seed"] = *env_seed;
  }
  for (const auto* layer : {&file_values, &flag_values}) {
    for (const auto& [key, value] : *layer) {
      check_key(command, key);
      merged[key] = value;
    }
  }
  for (const auto& [key, value] : merged) {
    if (key == "seed") {
      config.seed = parse_uint("seed", value);
    } else if (key == "out") {
      config.out = value;
    } else if (key == "format") {
      if (value == "csv") {
        config.format = Format::Csv;
      } else if (value == "json") {
        config.format = Format::Json;
      } else {
        throw UsageError("format must be csv or json");
      }
    } else if (key == "timing") {
      config.timing = value == "1" || value == "true" || value == "yes";
    } else {
      config.params[key] = value;
    }
  }
  return config;
}

/// Reads a config file for `command` and applies defaults.
inline RunConfig load_config(const std::string& path, const std::string& command)
{
  return make_run_config(command, read_config_file(path), {});
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct ReportRow {
  std::string experiment;
  std::map<std::string, std::string> params;
  std::string metric;
  double value = 0.0;
  std::optional<double> std_error;
  std::optional<double> seconds;
};

inline std::string format_number(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_field(const std::string& s)
{
  if (s.find_first_of(",\"\n") == std::string::npos) {
    return s;
  }
  std::string out = "\"";
  for (const char c : s) {
    if (c == '"') {
      out += '"';
    }
    out += c;
  }
  return out + "\"";
}

class Report {
public:
  explicit Report(RunConfig config) : config_(std::move(config)) {}

  /// The parameter snapshot written with every row: all parameters plus
  /// the seed, with optional per-row overrides.
  std::map<std::string, std::string> snapshot(const std::map<std::string, std::string>& overrides = {}) const
  {
    auto s = config_.params;
    s["seed"] = std::to_string(config_.seed);
    for (const auto& [k, v] : overrides) {
      s[k] = v;
    }
    return s;
  }

  void add(std::string metric, double value, std::optional<double> std_error = std::nullopt,
           const std::map<std::string, std::string>& overrides = {}, std::optional<double> seconds = std::nullopt)
  {
    rows_.push_back({config_.command, snapshot(overrides), std::move(metric), value, std_error,
                     config_.timing ? seconds : std::nullopt});
  }

  const std::vector<ReportRow>& rows() const noexcept { return rows_; }

  void write_csv(std::ostream& out, double wall_seconds) const
  {
    out << "# gateaux " << config_.command << " wall_seconds=" << format_number(wall_seconds) << '\n';
    write_csv_body(out);
  }

  void write_csv_body(std::ostream& out) const
  {
    const auto keys = snapshot();
    out << "experiment";
    for (const auto& [k, v] : keys) {
      out << ',' << csv_field(k);
    }
    out << ",metric,value,std_error,seconds\n";
    for (const auto& row : rows_) {
      out << csv_field(row.experiment);
      for (const auto& [k, v] : keys) {
        const auto it = row.params.find(k);
        out << ',' << csv_field(it == row.params.end() ? std::string() : it->second);
      }
      out << ',' << csv_field(row.metric) << ',' << format_number(row.value) << ','
          << (row.std_error ? format_number(*row.std_error) : std::string()) << ','
          << (row.seconds ? format_number(*row.seconds) : std::string()) << '\n';
    }
  }

  void write_json(std::ostream& out, double wall_seconds) const
  {
    nlohmann::ordered_json doc;
    doc["meta"] = {{"command", config_.command}, {"wall_seconds", wall_seconds}};
    doc["rows"] = nlohmann::ordered_json::array();
    for (const auto& row : rows_) {
      nlohmann::ordered_json r;
      r["experiment"] = row.experiment;
      r["params"] = row.params;
      r["metric"] = row.metric;
      r["value"] = row.value;
      r["std_error"] = row.std_error ? nlohmann::ordered_json(*row.std_error) : nlohmann::ordered_json();
      r["seconds"] = row.seconds ? nlohmann::ordered_json(*row.seconds) : nlohmann::ordered_json();
      doc["rows"].push_back(std::move(r));
    }
    out << doc.dump(2) << '\n';
  }

private:
  RunConfig config_;
  std::vector<ReportRow> rows_;
};

// ---------------------------------------------------------------------------
// Built-in functionals
// ---------------------------------------------------------------------------

/// Piecewise-constant kernel from a whitespace-separated grid file: one row of
/// m values is K_1 on m cells, m rows of m values are K_2 on an m x m grid.
struct KernelGrid {
  std::size_t order = 1;
  std::size_t cells = 0;
  std::vector<double> values;
};

inline KernelGrid parse_kernel_grid(std::string_view text, const std::string& name = "kernel")
{
  std::vector<std::vector<double>> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::vector<double> row;
    std::string tok;
    while (fields >> tok) {
      row.push_back(parse_double(name, tok));
    }
    if (!row.empty()) {
      rows.push_back(std::move(row));
    }
  }
  if (rows.empty()) {
    throw UsageError(name + ": empty kernel grid");
  }
  KernelGrid grid;
  grid.cells = rows.front().size();
  for (const auto& r : rows) {
    if (r.size() != grid.cells) {
      throw UsageError(name + ": ragged kernel grid");
    }
    grid.values.insert(grid.values.end(), r.begin(), r.end());
  }
  if (rows.size() == 1) {
    grid.order = 1;
  } else if (rows.size() == grid.cells) {
    grid.order = 2;
  } else {
    throw UsageError(name + ": kernel grid must be 1 x m or m x m");
  }
  return grid;
}

inline Functional make_volterra(const std::vector<KernelGrid>& grids)
{
  VolterraSeries series;
  for (const auto& grid : grids) {
    if (series.kernels.size() < grid.order) {
      series.kernels.resize(grid.order);
    }
    if (series.kernels[grid.order - 1]) {
      throw UsageError("two kernel files of the same order");
    }
    series.kernels[grid.order - 1] = [grid](std::span<const double> t) {
      std::size_t flat = 0;
      for (const double ti : t) {
        flat = flat * grid.cells + StepFunction::cell_of(std::clamp(ti, 0.0, 1.0), grid.cells);
      }
      return grid.values[flat];
    };
  }
  return Functional(std::move(series));
}

inline Functional make_functional(const std::string& name, double alpha, const std::string& kernel_files = {})
{
  using V = std::span<const double>;
  if (name == "v") {
    return Functional(PointCylinder{[](V v) { return v[0]; }, {alpha}});
  }
  if (name == "v2") {
    return Functional(PointCylinder{[](V v) { return v[0] * v[0]; }, {alpha}});
  }
  if (name == "v4") {
    return Functional(PointCylinder{[](V v) { return v[0] * v[0] * v[0] * v[0]; }, {alpha}});
  }
  if (name == "cos") {
    return Functional(PointCylinder{[](V v) { return std::cos(v[0]); }, {alpha}});
  }
  if (name == "int-square") {
    return Functional(IntegralCylinder{1, [](V v, V) { return v[0] * v[0]; }});
  }
  if (name == "mean") {
    return Functional(VolterraSeries{{[](V) { return 1.0; }}});
  }
  if (name == "mean-square") {
    return Functional(VolterraSeries{{{}, [](V) { return 1.0; }}});
  }
  if (name == "volterra") {
    std::vector<KernelGrid> grids;
    for (const auto& path : split(kernel_files, ';')) {
      std::ifstream in(path);
      if (!in) {
        throw UsageError("cannot open kernel file '" + path + "'");
      }
      std::ostringstream buffer;
      buffer << in.rdbuf();
      grids.push_back(parse_kernel_grid(buffer.str(), path));
    }
    if (grids.empty()) {
      throw UsageError("functional 'volterra' needs kernel files");
    }
    return make_volterra(grids);
  }
  throw UsageError("unknown functional '" + name + "' (v, v2, v4, cos, int-square, mean, mean-square, volterra)");
}

inline IntegerPredicate make_predicate(const std::string& name)
{
  auto suffix = [&](std::string_view prefix) -> std::optional<std::uint64_t> {
    if (name.rfind(prefix, 0) == 0) {
      return parse_uint("set", name.substr(prefix.size()));
    }
    return std::nullopt;
  };
  if (name == "even") {
    return predicates::even();
  }
  if (name == "square") {
    return predicates::square();
  }
  if (name == "squarefree") {
    return predicates::squarefree();
  }
  if (name == "all") {
    return predicates::all();
  }
  if (name == "empty") {
    return predicates::none();
  }
  try {
    if (const auto m = suffix("multiple:")) {
      return predicates::multiple_of(*m);
    }
    if (const auto d = suffix("leading-digit:")) {
      return predicates::leading_digit(static_cast<unsigned>(*d));
    }
  } catch (const DomainError& e) {
    throw UsageError(e.what());
  }
  throw UsageError("unknown set '" + name + "' (even, multiple:<m>, square, squarefree, leading-digit:<d>)");
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

namespace detail {

using Clock = std::chrono::steady_clock;

inline double seconds_since(Clock::time_point t0)
{
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

inline std::vector<MarginalConvention> conventions(const std::string& text)
{
  if (text == "surface") {
    return {MarginalConvention::SurfaceMeasure};
  }
  if (text == "slice") {
    return {MarginalConvention::BallSlice};
  }
  if (text == "both") {
    return {MarginalConvention::BallSlice, MarginalConvention::SurfaceMeasure};
  }
  throw UsageError("convention must be surface, slice or both");
}

inline unsigned threads_of(const RunConfig& c)
{
  return static_cast<unsigned>(parse_uint("threads", c.get("threads")));
}

inline void run_section_mean(const RunConfig& c, Report& report)
{
  const Functional func = make_functional(c.get("functional"), parse_double("alpha", c.get("alpha")), c.get("kernel"));
  const SphereSection section(parse_uint("n", c.get("n")), parse_double("R", c.get("R")));
  const std::string method = c.get("method");
  if (method != "quadrature" && method != "mc" && method != "both") {
    throw UsageError("method must be quadrature, mc or both");
  }
  if (method != "mc") {
    for (const auto conv : conventions(c.get("convention"))) {
      const auto t0 = Clock::now();
      const auto est = section_mean_quadrature(func, section, conv, parse_uint("order", c.get("order")));
      report.add(std::string("mean:quadrature:") + to_string(conv), est.value, 0.0, {}, seconds_since(t0));
    }
  }
  if (method != "quadrature") {
    const auto t0 = Clock::now();
    const auto est =
        section_mean_monte_carlo(func, section, parse_uint("samples", c.get("samples")), c.seed, threads_of(c));
    report.add("mean:monte-carlo:surface", est.value, est.std_error, {}, seconds_since(t0));
  }
}

inline void run_limit(const RunConfig& c, Report& report)
{
  const Functional func = make_functional(c.get("functional"), parse_double("alpha", c.get("alpha")), c.get("kernel"));
  const auto t0 = Clock::now();
  const double value = gaussian_limit_mean(func, parse_double("R", c.get("R")), parse_uint("hermite", c.get("hermite")),
                                           parse_uint("order", c.get("order")));
  report.add("limit", value, 0.0, {}, seconds_since(t0));
}

inline void run_converge(const RunConfig& c, Report& report)
{
  const Functional func = make_functional(c.get("functional"), parse_double("alpha", c.get("alpha")), c.get("kernel"));
  ConvergenceOptions options;
  const std::string method = c.get("method");
  if (method == "quadrature") {
    options.method = MeanMethod::Quadrature;
  } else if (method == "mc") {
    options.method = MeanMethod::MonteCarlo;
  } else {
    throw UsageError("method must be quadrature or mc");
  }
  const auto convs = conventions(c.get("convention"));
  if (convs.size() != 1) {
    throw UsageError("converge takes a single convention");
  }
  options.convention = convs.front();
  options.order = parse_uint("order", c.get("order"));
  options.hermite_order = parse_uint("hermite", c.get("hermite"));
  options.samples = parse_uint("samples", c.get("samples"));
  options.seed = c.seed;
  options.threads = threads_of(c);
  std::vector<std::size_t> n_list;
  for (const auto n : parse_uint_list("n", c.get("n"))) {
    n_list.push_back(n);
  }
  const auto t0 = Clock::now();
  const auto result = convergence_report(func, parse_double("R", c.get("R")), n_list, options);
  const double elapsed = seconds_since(t0);
  report.add("limit", result.limit, 0.0, {}, elapsed);
  for (const auto& row : result.rows) {
    const std::map<std::string, std::string> at{{"n", std::to_string(row.n)}};
    report.add("mean", row.mean, row.std_error, at);
    report.add("abs_error", row.abs_error, std::nullopt, at);
  }
  if (result.fit) {
    report.add("fit_exponent", result.fit->exponent);
    report.add("fit_intercept", result.fit->intercept);
    report.add("fit_r_squared", result.fit->r_squared);
  } else {
    report.add("fit_skipped", 1.0);
  }
}

inline void run_field(const RunConfig& c, Report& report)
{
  const Functional func = make_functional(c.get("functional"), parse_double("alpha", c.get("alpha")), c.get("kernel"));
  const auto samples = parse_uint("samples", c.get("samples"));
  std::uint64_t index = 0;
  for (const auto n : parse_uint_list("n", c.get("n"))) {
    const auto t0 = Clock::now();
    const auto est = field_integral(func, n, samples, SeedPath(c.seed, {index++}), threads_of(c));
    report.add(std::string("field_mean:") + to_string(est.method), est.value, est.std_error,
               {{"n", std::to_string(n)}}, seconds_since(t0));
  }
}

inline void run_density(const RunConfig& c, Report& report)
{
  const auto predicate = make_predicate(c.get("set"));
  const auto t0 = Clock::now();
  const auto est = density(predicate, parse_uint("N", c.get("N")), parse_uint("checkpoints", c.get("checkpoints")));
  report.add("density", est.value, std::nullopt, {}, seconds_since(t0));
  for (const auto& mark : est.trace) {
    report.add("density_checkpoint", mark.value, std::nullopt, {{"N", std::to_string(mark.N)}});
  }
  if (!c.get("N-list").empty()) {
    const auto horizons = parse_uint_list("N-list", c.get("N-list"));
    const auto diag = convergence_diagnostic(predicate, horizons);
    for (const auto& v : diag.values) {
      report.add("density_at", v.value, std::nullopt, {{"N", std::to_string(v.N)}});
    }
    report.add("oscillation", diag.oscillation);
  }
}

inline void run_passage(const RunConfig& c, Report& report)
{
  BrownianConfig config;
  config.dt = parse_double("dt", c.get("dt"));
  config.horizon = parse_double("horizon", c.get("horizon"));
  config.seed = c.seed;
  config.threads = threads_of(c);
  const std::string method = c.get("method");
  if (method == "auto") {
    config.method = PassageMethod::Auto;
  } else if (method == "full") {
    config.method = PassageMethod::FullCoordinates;
  } else if (method == "radial") {
    config.method = PassageMethod::RadialReduction;
  } else {
    throw UsageError("method must be auto, full or radial");
  }
  const auto reps = parse_uint("reps", c.get("reps"));
  std::ofstream times;
  if (!c.get("times-out").empty()) {
    times.open(c.get("times-out"));
    if (!times) {
      throw UsageError("cannot write '" + c.get("times-out") + "'");
    }
    times << "n,replication_index,T\n";
  }
  for (const auto n : parse_uint_list("n", c.get("n"))) {
    config.n = n;
    const double radius =
        c.get("radius").empty() ? std::sqrt(static_cast<double>(n)) : parse_double("radius", c.get("radius"));
    const auto t0 = Clock::now();
    const auto stats = first_passage_stats(config, radius, reps);
    const double elapsed = seconds_since(t0);
    const std::map<std::string, std::string> at{{"n", std::to_string(n)}};
    const double uncensored = static_cast<double>(stats.passage_times.size());
    report.add("mean_T", stats.mean_T, uncensored > 1 ? std::sqrt(stats.var_T / uncensored) : 0.0, at, elapsed);
    report.add("var_T", stats.var_T, std::nullopt, at);
    report.add("censored", static_cast<double>(stats.censored), std::nullopt, at);
    if (stats.exit_first_coordinates.size() >= kMinExitSamples) {
      report.add(exit_marginal_is_continuous(n) ? "exit_ks" : "exit_ks_two_point", exit_marginal_ks(stats),
                 std::nullopt, at);
    }
    if (times.is_open()) {
      for (std::size_t i = 0; i < stats.passage_times.size(); ++i) {
        times << n << ',' << i << ',' << format_number(stats.passage_times[i]) << '\n';
      }
    }
  }
}

inline void run_wiener(const RunConfig& c, Report& report)
{
  const auto modes = parse_uint("modes", c.get("modes"));
  const auto grid = parse_uint("grid", c.get("grid"));
  const auto samples = parse_uint("samples", c.get("samples"));
  const auto t0 = Clock::now();
  const auto key = SeedPath(c.seed).key();
  RunningMoments end_square, qv;
  for (std::uint64_t i = 0; i < samples; ++i) {
    Stream stream = derive_stream(key, i);
    const auto path = sample_wiener_path(modes, grid, stream);
    end_square.push(path.back() * path.back());
    qv.push(quadratic_variation(path));
  }
  report.add("var_W1", end_square.mean(), end_square.standard_error(), {}, seconds_since(t0));
  report.add("quadratic_variation", qv.mean(), qv.standard_error());
}

inline void run_green(const RunConfig& c, Report& report)
{
  const auto field = fields::make(c.get("function"));
  const auto coords = parse_double_list("P", c.get("P"));
  if (coords.size() != 3) {
    throw UsageError("P must be three comma-separated coordinates");
  }
  const Point3 p{coords[0], coords[1], coords[2]};
  const auto boundary = BoundarySpec::sphere(parse_double("a", c.get("a")), parse_uint("order", c.get("order")));
  const auto t0 = Clock::now();
  const auto terms = green_terms(boundary, field.sample, p, parse_uint("shells", c.get("shells")));
  const double exact = field.sample.value(p);
  report.add("volume_term", terms.volume, std::nullopt, {}, seconds_since(t0));
  report.add("single_layer_term", terms.single);
  report.add("double_layer_term", terms.dipole);
  report.add("reconstruction", terms.value);
  report.add("exact", exact);
  report.add("abs_error", std::abs(terms.value - exact));
  report.add("near_boundary", terms.near_boundary ? 1.0 : 0.0);
}

struct Check {
  std::string name;
  std::function<bool()> run;
};

/// Fast invariant checks, one line each.
inline std::vector<Check> selftest_checks(std::uint64_t seed)
{
  using V = std::span<const double>;
  std::vector<Check> checks;
  checks.push_back({"wallis-recursion", [] {
                      for (std::size_t n = 2; n <= 60; ++n) {
                        const double lhs = static_cast<double>(n) * wallis(n);
                        const double rhs = static_cast<double>(n - 1) * wallis(n - 2);
                        if (std::abs(lhs - rhs) > 1e-12 * rhs) {
                          return false;
                        }
                      }
                      return true;
                    }});
  checks.push_back({"ball-volume-gamma", [] {
                      for (std::size_t n = 1; n <= 30; ++n) {
                        const double d = static_cast<double>(n);
                        const double exact = std::exp(0.5 * d * std::log(std::numbers::pi) - std::lgamma(0.5 * d + 1.0));
                        if (std::abs(ball_volume(n) - exact) > 1e-10 * exact) {
                          return false;
                        }
                      }
                      return true;
                    }});
  checks.push_back({"sphere-sample-norm", [seed] {
                      Stream s = derive_stream(SeedPath(seed, {1}));
                      for (int i = 0; i < 100; ++i) {
                        const auto x = sample_sphere(37, 2.5, s);
                        double n2 = 0.0;
                        for (const double v : x) {
                          n2 += v * v;
                        }
                        if (std::abs(std::sqrt(n2) - 2.5) > 1e-12 * 2.5) {
                          return false;
                        }
                      }
                      return true;
                    }});
  checks.push_back({"section-mean-v2", [] {
                      const Functional f(PointCylinder{[](V v) { return v[0] * v[0]; }, {0.5}});
                      for (const std::size_t n : {3u, 10u, 100u, 1000u}) {
                        const SphereSection s(n, 1.3);
                        const double surf = section_mean_quadrature(f, s, MarginalConvention::SurfaceMeasure).value;
                        const double slice = section_mean_quadrature(f, s, MarginalConvention::BallSlice).value;
                        const double nn = static_cast<double>(n);
                        if (std::abs(surf - 1.69) > 1e-9 || std::abs(slice - nn * 1.69 / (nn + 2.0)) > 1e-9) {
                          return false;
                        }
                      }
                      return true;
                    }});
  checks.push_back({"constancy-int-square", [seed] {
                      const Functional f(IntegralCylinder{1, [](V v, V) { return v[0] * v[0]; }});
                      const auto est = section_mean_monte_carlo(f, SphereSection(50, 2.0), 200, seed);
                      return std::abs(est.value - 4.0) <= 1e-12 * 4.0 && est.std_error <= 1e-12;
                    }});
  checks.push_back({"gaussian-limit-moments", [] {
                      const Functional v4(PointCylinder{[](V v) { return std::pow(v[0], 4); }, {0.5}});
                      const Functional c(PointCylinder{[](V v) { return std::cos(v[0]); }, {0.5}});
                      return std::abs(gaussian_limit_mean(v4, 1.2) - 3.0 * std::pow(1.2, 4)) < 1e-9 &&
                             std::abs(gaussian_limit_mean(c, 1.0) - std::exp(-0.5)) < 1e-12;
                    }});
  checks.push_back({"density-complement", [] {
                      const auto sq = predicates::square();
                      const auto a = density(sq, 100000).value;
                      const auto b = density([&](std::uint64_t k) { return !sq(k); }, 100000).value;
                      return a + b == 1.0 && a == 0.00316;
                    }});
  checks.push_back({"green-harmonic", [] {
                      const auto boundary = BoundarySpec::sphere(1.0);
                      for (const auto& name : fields::harmonic_names()) {
                        const auto f = fields::make(name);
                        const Point3 p{0.3, -0.2, 0.25};
                        if (std::abs(green_reconstruct(boundary, f.sample, p) - f.sample.value(p)) > 1e-4) {
                          return false;
                        }
                      }
                      return true;
                    }});
  checks.push_back({"gateaux-linearity", [] {
                      const Functional f(IntegralCylinder{1, [](V v, V) { return v[0] * v[0] * v[0]; }});
                      const StepFunction x({0.3, -1.2, 0.7, 2.0});
                      const StepFunction h1({1.0, 0.5, -0.25, 0.0}), h2({-0.4, 0.1, 0.9, 1.5});
                      const double lhs = gateaux_differential(f, x, h1.axpy(2.0, h2));
                      const double rhs = gateaux_differential(f, x, h1) + 2.0 * gateaux_differential(f, x, h2);
                      return std::abs(lhs - rhs) < 1e-8;
                    }});
  checks.push_back({"chunked-determinism", [seed] {
                      const Functional f(PointCylinder{[](V v) { return v[0] * v[0] * v[0] * v[0]; }, {0.3}});
                      const auto a = section_mean_monte_carlo(f, SphereSection(20, 1.0), 5000, seed, 1);
                      const auto b = section_mean_monte_carlo(f, SphereSection(20, 1.0), 5000, seed, 4);
                      return a.value == b.value && a.std_error == b.std_error;
                    }});
  return checks;
}

inline bool run_selftest(const RunConfig& c, Report& report, std::ostream& log)
{
  bool all = true;
  for (const auto& check : selftest_checks(c.seed)) {
    bool ok = false;
    try {
      ok = check.run();
    } catch (const std::exception& e) {
      log << "  " << check.name << ": " << e.what() << '\n';
    }
    log << (ok ? "PASS " : "FAIL ") << check.name << '\n';
    report.add(check.name, ok ? 1.0 : 0.0);
    all = all && ok;
  }
  return all;
}

} // namespace detail

/// Runs `config.command` and writes its report to `out` (selftest writes its
/// pass/fail lines there instead). Diagnostics go to `log`. Returns the process exit code.
inline int run(const RunConfig& config, std::ostream& out, std::ostream& log)
{
  const auto t0 = detail::Clock::now();
  Report report(config);
  bool ok = true;
  try {
    const auto& cmd = config.command;
    if (cmd == "section-mean") {
      detail::run_section_mean(config, report);
    } else if (cmd == "limit") {
      detail::run_limit(config, report);
    } else if (cmd == "converge") {
      detail::run_converge(config, report);
    } else if (cmd == "field") {
      detail::run_field(config, report);
    } else if (cmd == "density") {
      detail::run_density(config, report);
    } else if (cmd == "passage") {
      detail::run_passage(config, report);
    } else if (cmd == "wiener") {
      detail::run_wiener(config, report);
    } else if (cmd == "green") {
      detail::run_green(config, report);
    } else if (cmd == "selftest") {
      ok = detail::run_selftest(config, report, out);
    } else {
      throw UsageError("unknown command '" + cmd + "'");
    }
  } catch (const UsageError& e) {
    log << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const DomainError& e) {
    log << config.command << ": invalid input: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    log << config.command << ": numeric failure: " << e.what() << '\n';
    return kNumeric;
  }

  const double wall = detail::seconds_since(t0);
  auto write = [&](std::ostream& os) {
    if (config.format == Format::Csv) {
      report.write_csv(os, wall);
    } else {
      report.write_json(os, wall);
    }
  };
  if (config.out.empty()) {
    if (config.command != "selftest") {
      write(out);
    }
  } else {
    std::ofstream file(config.out);
    if (!file) {
      log << "cannot write '" << config.out << "'\n";
      return kUsage;
    }
    write(file);
  }
  return ok ? kSuccess : kNumeric;
}

} // namespace gateaux::cli
