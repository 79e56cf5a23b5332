#ifndef VWS_CONFIG_HPP
#define VWS_CONFIG_HPP

// Run specifications: a flat INI-style file of [section] headers and
// `key = value` lines. '#' and ';' start comments; lists are comma-separated.

#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "vws/solver.hpp"

namespace vws {

/// Invalid spec; the message carries the source line and field name.
class SpecError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

enum class RhsKind { singular, manufactured, zero, file };

struct RunSpec {
  int dim = 2;
  int n = 64;
  std::string flux = "p_laplacian";
  std::map<std::string, double> flux_params{{"p", 2.0}};

  RhsKind rhs = RhsKind::singular;
  double beta = 0.7;
  Point center{0.5, 0.5};
  bool radial = true;
  Point direction{1.0, 0.0};
  std::string rhs_file;

  std::vector<double> q{2.0};
  /// Truncation ladder; empty solves once with the untruncated data.
  std::vector<double> levels;
  std::vector<double> deltas;
  std::vector<std::string> reports{"apri1", "apri2"};

  SolverConfig solver;

  std::string out = "vws_out";
  bool snapshots = true;
  std::uint64_t seed = 1;
  unsigned threads = 1;

  /// Source line of every field that was set, keyed "section.key".
  std::map<std::string, int> lines;

  double p() const { return flux_params.at("p"); }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(v);
  while (std::getline(is, item, ',')) out.push_back(trim(item));
  return out;
}

class FieldReader {
 public:
  FieldReader(std::string origin, int line, std::string field)
      : origin_(std::move(origin)), line_(line), field_(std::move(field)) {}

  [[noreturn]] void fail(const std::string& what) const {
    std::ostringstream os;
    os << origin_ << ':' << line_ << ": field '" << field_ << "': " << what;
    throw SpecError(os.str());
  }

  double number(const std::string& v) const {
    double x = 0.0;
    const char* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, x);
    if (ec != std::errc() || ptr != end || !std::isfinite(x)) fail("expected a number, got '" + v + "'");
    return x;
  }

  long long integer(const std::string& v) const {
    long long x = 0;
    const char* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, x);
    if (ec != std::errc() || ptr != end) fail("expected an integer, got '" + v + "'");
    return x;
  }

  bool boolean(const std::string& v) const {
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    fail("expected true or false, got '" + v + "'");
  }

  std::vector<double> numbers(const std::string& v) const {
    std::vector<double> out;
    for (const auto& item : split_list(v)) {
      if (item.empty()) fail("empty list entry");
      out.push_back(number(item));
    }
    return out;
  }

  Point point(const std::string& v, int count) const {
    const auto xs = numbers(v);
    if (static_cast<int>(xs.size()) != count) fail("expected " + std::to_string(count) + " coordinates");
    Point p{0.0, 0.0};
    for (int a = 0; a < count; ++a) p[a] = xs[a];
    return p;
  }

 private:
  std::string origin_;
  int line_;
  std::string field_;
};

}  // namespace detail

/// Parses and validates a spec. `origin` names the source in diagnostics.
inline RunSpec parse_spec(std::istream& is, const std::string& origin = "spec") {
  RunSpec spec;
  std::string section;
  std::string raw;
  int lineno = 0;
  // Raw values first, so that point-valued fields can depend on grid.dim.
  std::vector<std::tuple<std::string, std::string, int>> entries;
  while (std::getline(is, raw)) {
    ++lineno;
    std::string line = raw;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw SpecError(origin + ':' + std::to_string(lineno) + ": unterminated section header");
      section = detail::trim(std::string_view(line).substr(1, line.size() - 2));
      static const std::vector<std::string> known{"grid", "flux", "rhs", "estimates", "solver", "output", "run"};
      if (std::find(known.begin(), known.end(), section) == known.end())
        throw SpecError(origin + ':' + std::to_string(lineno) + ": unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw SpecError(origin + ':' + std::to_string(lineno) + ": expected 'key = value'");
    if (section.empty())
      throw SpecError(origin + ':' + std::to_string(lineno) + ": key outside of any section");
    const std::string key = detail::trim(std::string_view(line).substr(0, eq));
    const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
    const std::string field = section + "." + key;
    if (spec.lines.count(field))
      throw SpecError(origin + ':' + std::to_string(lineno) + ": field '" + field + "' set twice (first on line " +
                      std::to_string(spec.lines[field]) + ")");
    spec.lines[field] = lineno;
    entries.emplace_back(field, value, lineno);
  }

  for (const auto& [field, value, line] : entries)
    if (field == "grid.dim") spec.dim = static_cast<int>(detail::FieldReader(origin, line, field).integer(value));
  spec.flux_params.clear();
  for (const auto& [field, value, line] : entries) {
    const detail::FieldReader r(origin, line, field);
    if (value.empty()) r.fail("empty value");
    if (field == "grid.dim") continue;
    else if (field == "grid.n") spec.n = static_cast<int>(r.integer(value));
    else if (field == "flux.model") spec.flux = value;
    else if (field.rfind("flux.", 0) == 0) spec.flux_params[field.substr(5)] = r.number(value);
    else if (field == "rhs.kind") {
      if (value == "singular") spec.rhs = RhsKind::singular;
      else if (value == "manufactured") spec.rhs = RhsKind::manufactured;
      else if (value == "zero") spec.rhs = RhsKind::zero;
      else if (value == "file") spec.rhs = RhsKind::file;
      else r.fail("unknown rhs kind '" + value + "' (singular, manufactured, zero, file)");
    } else if (field == "rhs.beta") spec.beta = r.number(value);
    else if (field == "rhs.center") spec.center = r.point(value, spec.dim);
    else if (field == "rhs.direction") {
      spec.radial = value == "radial";
      if (!spec.radial) spec.direction = r.point(value, spec.dim);
    } else if (field == "rhs.file") spec.rhs_file = value;
    else if (field == "estimates.q") spec.q = r.numbers(value);
    else if (field == "estimates.levels") spec.levels = r.numbers(value);
    else if (field == "estimates.deltas") spec.deltas = r.numbers(value);
    else if (field == "estimates.reports") {
      spec.reports = detail::split_list(value);
      for (const auto& name : spec.reports)
        if (name != "apri1" && name != "apri2" && name != "apri3" && name != "apriori")
          r.fail("unknown report '" + name + "' (apri1, apri2, apri3, apriori)");
    } else if (field == "solver.mu0") spec.solver.mu0 = r.number(value);
    else if (field == "solver.mu_min") spec.solver.mu_min = r.number(value);
    else if (field == "solver.mu_floor") spec.solver.mu_floor = r.number(value);
    else if (field == "solver.continuation") spec.solver.continuation = r.number(value);
    else if (field == "solver.tol_grad") spec.solver.tol_grad = r.number(value);
    else if (field == "solver.tol_relative") spec.solver.tol_relative = r.number(value);
    else if (field == "solver.max_iters") spec.solver.max_iters = static_cast<int>(r.integer(value));
    else if (field == "solver.armijo") spec.solver.armijo = r.number(value);
    else if (field == "solver.backtrack") spec.solver.backtrack = r.number(value);
    else if (field == "output.dir") spec.out = value;
    else if (field == "output.snapshots") spec.snapshots = r.boolean(value);
    else if (field == "run.seed") {
      const long long s = r.integer(value);
      if (s < 0) r.fail("seed must be nonnegative");
      spec.seed = static_cast<std::uint64_t>(s);
    } else if (field == "run.threads") {
      const long long t = r.integer(value);
      if (t < 1 || t > 256) r.fail("threads must lie in [1, 256]");
      spec.threads = static_cast<unsigned>(t);
    } else {
      r.fail("unknown field");
    }
  }

  auto at = [&](const std::string& field) {
    auto it = spec.lines.find(field);
    return detail::FieldReader(origin, it == spec.lines.end() ? 0 : it->second, field);
  };
  if (spec.dim != 1 && spec.dim != 2) at("grid.dim").fail("must be 1 or 2");
  if (spec.n < 2 || !is_power_of_two(spec.n)) at("grid.n").fail("must be a power of two >= 2");
  if (!spec.flux_params.count("p")) at("flux.p").fail("missing (required)");
  if (std::find(flux_names().begin(), flux_names().end(), spec.flux) == flux_names().end())
    at("flux.model").fail("unknown model '" + spec.flux + "'");
  for (const auto& [key, value] : spec.flux_params)
    if (key != "p" && !(spec.flux == "skew" && key == "b"))
      at("flux." + key).fail("unknown parameter for flux " + spec.flux);
  try {
    make_flux(spec.flux, spec.dim, 1, spec.flux_params);
  } catch (const InvalidArgument& e) {
    at("flux.model").fail(e.what());
  }
  if (spec.rhs == RhsKind::singular && !(spec.beta > 0.0)) at("rhs.beta").fail("must be positive");
  if (spec.rhs == RhsKind::file && spec.rhs_file.empty()) at("rhs.file").fail("required for kind = file");
  if (spec.q.empty()) at("estimates.q").fail("need at least one exponent");
  for (double q : spec.q)
    if (!(q > 1.0 && q <= spec.p())) at("estimates.q").fail("every q must satisfy 1 < q <= p");
  for (std::size_t i = 0; i < spec.levels.size(); ++i) {
    if (!(spec.levels[i] > 0.0)) at("estimates.levels").fail("levels must be positive");
    if (i > 0 && !(spec.levels[i] > spec.levels[i - 1])) at("estimates.levels").fail("levels must increase");
  }
  for (double d : spec.deltas)
    if (!(d > 0.0)) at("estimates.deltas").fail("deltas must be positive");
  if (std::find(spec.reports.begin(), spec.reports.end(), "apriori") != spec.reports.end() && spec.deltas.empty())
    at("estimates.deltas").fail("apriori reports need at least one delta");
  try {
    spec.solver.validate();
  } catch (const InvalidArgument& e) {
    throw SpecError(origin + ": [solver]: " + e.what());
  }
  return spec;
}

inline RunSpec load_spec(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw SpecError("cannot open spec file '" + path + "'");
  return parse_spec(is, path);
}

inline std::string to_string(RhsKind k) {
  switch (k) {
    case RhsKind::singular: return "singular";
    case RhsKind::manufactured: return "manufactured";
    case RhsKind::zero: return "zero";
    case RhsKind::file: return "file";
  }
  return "?";
}

/// Canonical rendering of the spec (comments, ordering and the output
/// directory removed); hashed for the run summary.
inline std::string canonical_spec(const RunSpec& s) {
  std::ostringstream os;
  os << std::setprecision(17);
  auto list = [&](const std::vector<double>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  };
  os << "dim=" << s.dim << "\nn=" << s.n << "\nflux=" << s.flux;
  for (const auto& [k, v] : s.flux_params) os << "\nflux." << k << '=' << v;
  os << "\nrhs=" << to_string(s.rhs) << "\nbeta=" << s.beta << "\ncenter=" << s.center[0] << ',' << s.center[1]
     << "\nradial=" << s.radial << "\ndirection=" << s.direction[0] << ',' << s.direction[1] << "\nfile=" << s.rhs_file
     << "\nq=";
  list(s.q);
  os << "\nlevels=";
  list(s.levels);
  os << "\ndeltas=";
  list(s.deltas);
  os << "\nreports=";
  for (std::size_t i = 0; i < s.reports.size(); ++i) os << (i ? "," : "") << s.reports[i];
  const SolverConfig& c = s.solver;
  os << "\nsolver=" << c.mu0 << ',' << c.mu_min << ',' << c.mu_floor << ',' << c.continuation << ',' << c.tol_grad << ','
     << c.tol_relative << ',' << c.max_iters << ',' << c.armijo << ',' << c.backtrack << "\nseed=" << s.seed << '\n';
  return os.str();
}

/// 64-bit FNV-1a, as 16 hex digits.
inline std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace vws

#endif  // VWS_CONFIG_HPP
