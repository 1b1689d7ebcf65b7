#include "incstab/cli/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace incstab::cli {

namespace {

template <class T>
bool parse_number(const std::string &text, T &out) {
  const char *first = text.data();
  const char *last = first + text.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

// Tracks which keys of a section were read so that leftovers can be reported.
class SectionReader {
 public:
  SectionReader(const KeyValueDocument &doc, const std::string &name)
      : source_(doc.source), section_(doc.find(name)), name_(name) {}

  bool present() const { return section_ != nullptr; }
  int line() const { return section_ ? section_->line : 0; }

  const KeyValueEntry *entry(const std::string &key) {
    if (!section_) return nullptr;
    const KeyValueEntry *e = section_->find(key);
    if (e) used_.insert(key);
    return e;
  }

  int line_of(const std::string &key) const {
    if (!section_) return 0;
    const KeyValueEntry *e = section_->find(key);
    return e ? e->line : section_->line;
  }

  [[noreturn]] void fail(const std::string &key, const std::string &what) const {
    throw ConfigError(source_, line_of(key), what);
  }

  void read(const std::string &key, double &out) {
    if (const auto *e = entry(key))
      if (!parse_number(e->value, out) || !std::isfinite(out))
        fail(key, "'" + key + "' expects a finite number, got '" + e->value + "'");
  }

  void read(const std::string &key, std::optional<double> &out) {
    if (const auto *e = entry(key)) {
      double v = 0.0;
      if (!parse_number(e->value, v) || !std::isfinite(v))
        fail(key, "'" + key + "' expects a finite number, got '" + e->value + "'");
      out = v;
    }
  }

  template <class Int>
  void read_int(const std::string &key, Int &out) {
    if (const auto *e = entry(key))
      if (!parse_number(e->value, out))
        fail(key, "'" + key + "' expects an integer, got '" + e->value + "'");
  }

  void read(const std::string &key, std::string &out) {
    if (const auto *e = entry(key)) out = e->value;
  }

  void read(const std::string &key, bool &out) {
    if (const auto *e = entry(key)) {
      if (e->value == "true")
        out = true;
      else if (e->value == "false")
        out = false;
      else
        fail(key, "'" + key + "' expects true or false, got '" + e->value + "'");
    }
  }

  void read_vector(const std::string &key, Vector &out) {
    if (const auto *e = entry(key)) {
      try {
        out = parse_vector(e->value);
      } catch (const std::invalid_argument &err) {
        fail(key, "'" + key + "': " + err.what());
      }
    }
  }

  void reject_unknown() const {
    if (!section_) return;
    for (const auto &e : section_->entries)
      if (!used_.count(e.key))
        throw ConfigError(source_, e.line,
                          "unknown key '" + e.key + "' in section [" + name_ + "]");
  }

  const KeyValueSection *section() const { return section_; }

 private:
  std::string source_;
  const KeyValueSection *section_;
  std::string name_;
  std::set<std::string> used_;
};

void require(bool ok, const SectionReader &r, const std::string &key, const std::string &what) {
  if (!ok) r.fail(key, what);
}

std::string fmt(double v) { return format_double(v); }

PolynomialMap read_map(SectionReader &r, const std::string &prefix, int inputs, int outputs,
                       bool required) {
  PolynomialMap map;
  map.input_dim = inputs;
  for (int i = 0; i < outputs; ++i) {
    const std::string key = prefix + "." + std::to_string(i);
    std::string text;
    if (!r.entry(key)) {
      if (required) r.fail(key, "missing polynomial '" + key + "'");
    } else {
      r.read(key, text);
    }
    try {
      map.components.push_back(parse_polynomial(text, inputs));
    } catch (const std::invalid_argument &e) {
      r.fail(key, "'" + key + "': " + e.what());
    }
  }
  return map;
}

}  // namespace

const char *to_string(SystemKind s) {
  switch (s) {
    case SystemKind::fhn: return "fhn";
    case SystemKind::builtin_linear: return "builtin_linear";
    case SystemKind::user_polynomial: return "user_polynomial";
  }
  return "unknown";
}

const char *to_string(Action a) {
  switch (a) {
    case Action::simulate: return "simulate";
    case Action::certify: return "certify";
    case Action::estimate: return "estimate";
    case Action::invariant_set: return "invariant-set";
    case Action::fc_table: return "fc-table";
    case Action::figures: return "figures";
  }
  return "unknown";
}

std::optional<Action> parse_action(const std::string &text) {
  for (Action a : {Action::simulate, Action::certify, Action::estimate, Action::invariant_set,
                   Action::fc_table, Action::figures}) {
    std::string alt = to_string(a);
    std::replace(alt.begin(), alt.end(), '-', '_');
    if (text == to_string(a) || text == alt) return a;
  }
  return std::nullopt;
}

int Scenario::dim() const {
  switch (system) {
    case SystemKind::fhn: return 2;
    case SystemKind::builtin_linear:
      return initial_conditions.empty() ? 1 : static_cast<int>(initial_conditions.front().size());
    case SystemKind::user_polynomial:
      return polynomial.f1.input_dim + polynomial.f2.input_dim;
  }
  return 0;
}

Vector parse_vector(const std::string &text) {
  std::vector<double> values;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    const auto last = item.find_last_not_of(" \t");
    const std::string trimmed =
        first == std::string::npos ? std::string() : item.substr(first, last - first + 1);
    double v = 0.0;
    if (!parse_number(trimmed, v) || !std::isfinite(v))
      throw std::invalid_argument("'" + trimmed + "' is not a finite number");
    values.push_back(v);
  }
  if (values.empty()) throw std::invalid_argument("empty vector");
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::string format_vector(const Vector &v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += fmt(v[i]);
  }
  return out;
}

Scenario default_scenario(Action action) {
  std::istringstream in("[scenario]\nsystem = fhn\n");
  return parse_config(in, "<defaults>", action);
}

Scenario parse_config(std::istream &in, const std::string &source, Action action) {
  const KeyValueDocument doc = parse_key_value(in, source);
  Scenario s;
  s.action = action;
  if (action == Action::figures) {
    s.horizon = 100.0;
    s.output_stride = 10;
  }

  static const std::set<std::string> known = {"scenario", "params",    "initial",  "polynomial",
                                              "estimate", "certify",   "invariant", "fc_table"};
  for (const auto &sec : doc.sections) {
    if (sec.name.empty())
      throw ConfigError(source, sec.line, "entry outside of any [section]");
    if (!known.count(sec.name))
      throw ConfigError(source, sec.line, "unknown section [" + sec.name + "]");
  }

  SectionReader sc(doc, "scenario");
  if (!sc.present()) throw ConfigError(source, 1, "missing mandatory section [scenario]");
  sc.read("name", s.name);
  std::string system;
  if (!sc.entry("system")) sc.fail("system", "missing mandatory key 'system'");
  sc.read("system", system);
  if (system == "fhn")
    s.system = SystemKind::fhn;
  else if (system == "builtin_linear")
    s.system = SystemKind::builtin_linear;
  else if (system == "user_polynomial")
    s.system = SystemKind::user_polynomial;
  else
    sc.fail("system", "unknown system '" + system + "' (fhn, builtin_linear, user_polynomial)");

  std::string action_text;
  sc.read("action", action_text);
  if (!action_text.empty()) {
    const auto parsed = parse_action(action_text);
    if (!parsed) sc.fail("action", "unknown action '" + action_text + "'");
    if (*parsed != action)
      sc.fail("action", "config action '" + action_text + "' does not match subcommand '" +
                            to_string(action) + "'");
  }

  sc.read("t0", s.t0);
  sc.read("horizon", s.horizon);
  require(s.horizon > 0.0, sc, "horizon", "horizon must be positive");
  sc.read("step", s.step);
  require(s.step > 0.0, sc, "step", "step must be positive");
  require(s.step <= s.horizon, sc, "step", "step must not exceed the horizon");
  std::string method = "rk4";
  sc.read("method", method);
  if (method == "rk4")
    s.integrator.method = IntegratorMethod::fixed_rk4;
  else if (method == "adaptive")
    s.integrator.method = IntegratorMethod::adaptive_embedded;
  else
    sc.fail("method", "unknown method '" + method + "' (rk4, adaptive)");
  if (s.integrator.method == IntegratorMethod::fixed_rk4)
    require(s.horizon / s.step >= 2.0, sc, "step", "rk4 needs at least two steps over the horizon");
  sc.read("abs_tol", s.integrator.abs_tol);
  require(s.integrator.abs_tol > 0.0, sc, "abs_tol", "abs_tol must be positive");
  sc.read("rel_tol", s.integrator.rel_tol);
  require(s.integrator.rel_tol > 0.0, sc, "rel_tol", "rel_tol must be positive");
  sc.read_int("output_stride", s.output_stride);
  require(s.output_stride >= 1, sc, "output_stride", "output_stride must be at least 1");
  sc.read_int("seed", s.seed);
  sc.read("tolerance", s.tolerance);
  require(s.tolerance >= 0.0, sc, "tolerance", "tolerance must be nonnegative");
  std::string output;
  sc.read("output", output);
  if (!output.empty()) s.output_path = output;
  sc.reject_unknown();
  s.integrator.max_time = s.horizon;
  s.integrator.step = s.step;

  SectionReader params(doc, "params");
  if (s.system == SystemKind::fhn) {
    auto &p = s.fhn;
    params.read("b", p.b);
    require(p.b > 0.0, params, "b", "b must be positive");
    params.read("epsilon", p.epsilon);
    require(p.epsilon > 0.0, params, "epsilon", "epsilon must be positive");
    params.read("rho1", p.rho1);
    require(p.rho1 >= 0.0, params, "rho1", "rho1 must be nonnegative");
    params.read("rho2", p.rho2);
    require(p.rho2 >= 0.0, params, "rho2", "rho2 must be nonnegative");
    params.read("alpha", p.alpha);
    require(p.alpha > 0.0, params, "alpha", "alpha must be positive");
    std::optional<double> r;
    params.read("r", r);
    if (r) {
      if (params.entry("c")) params.fail("c", "give either c or r, not both");
      if (*r > 0.0 && params.entry("alpha"))
        require(p.alpha < 2.0 * *r * *r - 2.0, params, "alpha",
                "alpha must lie in (0, 2 r^2 - 2) = (0, " + fmt(2.0 * *r * *r - 2.0) + ")");
      try {
        p = fhn::FhnParams::from_r(*r, p.alpha, p.b, p.epsilon, p.rho1, p.rho2);
      } catch (const std::invalid_argument &e) {
        params.fail("r", e.what());
      }
    } else {
      params.read("c", p.c);
    }
    if (action == Action::certify || action == Action::fc_table) {
      const bool c_ok = p.c > 2.0 / 3.0;
      require(c_ok, params, r ? "r" : "c", "c must exceed 2/3 for the f_c weight");
      const double re = p.effective_r();
      require(p.alpha < 2.0 * re * re - 2.0, params, "alpha",
              "alpha must lie in (0, 2 r^2 - 2) = (0, " + fmt(2.0 * re * re - 2.0) + ")");
    }
  } else if (s.system == SystemKind::user_polynomial) {
    params.read("rho1", s.rho1);
    require(s.rho1 >= 0.0, params, "rho1", "rho1 must be nonnegative");
    params.read("rho2", s.rho2);
    require(s.rho2 >= 0.0, params, "rho2", "rho2 must be nonnegative");
  }
  params.reject_unknown();

  SectionReader poly(doc, "polynomial");
  if (s.system == SystemKind::user_polynomial) {
    if (!poly.present())
      throw ConfigError(source, 1, "user_polynomial needs a [polynomial] section");
    int n = 0;
    int m = 0;
    if (!poly.entry("n")) poly.fail("n", "missing mandatory key 'n'");
    if (!poly.entry("m")) poly.fail("m", "missing mandatory key 'm'");
    poly.read_int("n", n);
    poly.read_int("m", m);
    require(n >= 1, poly, "n", "n must be at least 1");
    require(m >= 1, poly, "m", "m must be at least 1");
    s.polynomial.f1 = read_map(poly, "f1", n, n, true);
    s.polynomial.f2 = read_map(poly, "f2", m, m, true);
    s.polynomial.g1 = read_map(poly, "g1", m, n, false);
    s.polynomial.g2 = read_map(poly, "g2", n, m, false);
  } else if (poly.present()) {
    throw ConfigError(source, poly.line(), "[polynomial] is only valid for system = user_polynomial");
  }
  poly.reject_unknown();

  SectionReader init(doc, "initial");
  if (init.present()) {
    std::map<int, std::pair<Vector, int>> ordered;
    for (const auto &e : init.section()->entries) {
      int index = 0;
      if (e.key.size() < 2 || e.key[0] != 'z' || !parse_number(e.key.substr(1), index) ||
          index < 1)
        throw ConfigError(source, e.line, "unknown key '" + e.key + "' in section [initial] (use z1, z2, ...)");
      Vector v;
      init.read_vector(e.key, v);
      ordered[index] = {v, e.line};
    }
    int expected = 1;
    for (const auto &[index, value] : ordered) {
      if (index != expected)
        throw ConfigError(source, value.second, "initial conditions must be numbered z1, z2, ... without gaps");
      ++expected;
      s.initial_conditions.push_back(value.first);
    }
    const int dim = s.dim();
    for (const auto &[index, value] : ordered)
      if (value.first.size() != dim)
        throw ConfigError(source, value.second,
                          "z" + std::to_string(index) + " has dimension " +
                              std::to_string(value.first.size()) + ", expected " +
                              std::to_string(dim));
  }

  SectionReader est(doc, "estimate");
  est.read_int("random_pairs", s.estimate.random_pairs);
  est.read_vector("box_lo", s.estimate.box_lo);
  est.read_vector("box_hi", s.estimate.box_hi);
  est.read("transient_skip", s.estimate.transient_skip);
  require(s.estimate.transient_skip >= 0.0 && s.estimate.transient_skip < 1.0, est,
          "transient_skip", "transient_skip must lie in [0, 1)");
  est.read("lambda_min", s.estimate.lambda_min);
  require(s.estimate.lambda_min >= 0.0, est, "lambda_min", "lambda_min must be nonnegative");
  est.read_int("threads", s.estimate.threads);
  est.reject_unknown();
  if (s.estimate.random_pairs > 0) {
    const int dim = s.dim();
    if (s.estimate.box_lo.size() == 0) s.estimate.box_lo = Vector::Constant(dim, -1.0);
    if (s.estimate.box_hi.size() == 0) s.estimate.box_hi = Vector::Constant(dim, 1.0);
    require(s.estimate.box_lo.size() == dim, est, "box_lo", "box_lo has the wrong dimension");
    require(s.estimate.box_hi.size() == dim, est, "box_hi", "box_hi has the wrong dimension");
    require((s.estimate.box_lo.array() < s.estimate.box_hi.array()).all(), est, "box_hi",
            "box_hi must exceed box_lo componentwise");
  }

  SectionReader cert(doc, "certify");
  cert.read("radius", s.certify.radius);
  if (s.certify.radius)
    require(*s.certify.radius > 0.0, cert, "radius", "radius must be positive");
  cert.read("alpha", s.certify.alpha);
  if (s.certify.alpha) require(*s.certify.alpha > 0.0, cert, "alpha", "alpha must be positive");
  std::string gains = "budget";
  cert.read("gains", gains);
  if (gains == "params")
    s.certify.use_param_gains = true;
  else if (gains != "budget")
    cert.fail("gains", "gains must be 'budget' or 'params'");
  cert.read_int("grid_density", s.certify.grid_density);
  require(s.certify.grid_density >= 3, cert, "grid_density", "grid_density must be at least 3");
  cert.read("safety_factor", s.certify.safety_factor);
  require(s.certify.safety_factor >= 1.0, cert, "safety_factor", "safety_factor must be at least 1");
  cert.read_int("samples", s.certify.samples);
  require(s.certify.samples >= 1, cert, "samples", "samples must be positive");
  cert.read("margin", s.certify.margin_m);
  require(s.certify.margin_m > 0.0, cert, "margin", "margin must be positive");
  cert.reject_unknown();

  SectionReader inv(doc, "invariant");
  inv.read("level_min", s.invariant.level_min);
  inv.read("level_max", s.invariant.level_max);
  require(s.invariant.level_min > 0.0 && s.invariant.level_max > s.invariant.level_min, inv,
          "level_max", "need 0 < level_min < level_max");
  inv.read_int("level_count", s.invariant.level_count);
  require(s.invariant.level_count >= 1, inv, "level_count", "level_count must be positive");
  inv.read_int("grid_density", s.invariant.grid_density);
  require(s.invariant.grid_density >= 3, inv, "grid_density", "grid_density must be at least 3");
  inv.read("shell_width", s.invariant.shell_width);
  require(s.invariant.shell_width > 0.0, inv, "shell_width", "shell_width must be positive");
  inv.reject_unknown();

  SectionReader fct(doc, "fc_table");
  fct.read_int("points", s.fc_table.points);
  require(s.fc_table.points >= 2, fct, "points", "points must be at least 2");
  fct.read_int("table_points", s.fc_table.table_points);
  require(s.fc_table.table_points >= 8, fct, "table_points", "table_points must be at least 8");
  fct.reject_unknown();

  if ((action == Action::certify || action == Action::fc_table) && s.system != SystemKind::fhn)
    sc.fail("system", std::string(to_string(action)) + " supports system = fhn only");
  if (action == Action::simulate && s.initial_conditions.empty())
    throw ConfigError(source, init.present() ? init.line() : sc.line(),
                      "simulate needs at least one initial condition in [initial]");
  if (action == Action::figures) {
    if (s.system != SystemKind::fhn) sc.fail("system", "figures supports system = fhn only");
    if (!s.initial_conditions.empty() && s.initial_conditions.size() != 2)
      throw ConfigError(source, init.line(), "figures takes exactly one pair z1, z2");
  }
  if (action == Action::estimate) {
    if (s.initial_conditions.size() % 2 != 0)
      throw ConfigError(source, init.line(), "estimate pairs initial conditions: need an even count");
    if (s.initial_conditions.empty() && s.estimate.random_pairs == 0)
      throw ConfigError(source, sc.line(),
                        "estimate needs initial condition pairs or [estimate] random_pairs > 0");
  }
  refresh_echo(s);
  return s;
}

Scenario parse_config(const std::filesystem::path &path, Action action) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "cannot open config file");
  return parse_config(in, path.string(), action);
}

void refresh_echo(Scenario &s) {
  auto &e = s.echo;
  e.clear();
  e.emplace_back("name", s.name);
  e.emplace_back("system", to_string(s.system));
  e.emplace_back("action", to_string(s.action));
  if (s.system == SystemKind::fhn) {
    e.emplace_back("c", fmt(s.fhn.c));
    e.emplace_back("b", fmt(s.fhn.b));
    e.emplace_back("epsilon", fmt(s.fhn.epsilon));
    e.emplace_back("rho1", fmt(s.fhn.rho1));
    e.emplace_back("rho2", fmt(s.fhn.rho2));
    e.emplace_back("alpha", fmt(s.fhn.alpha));
    if (s.fhn.r) e.emplace_back("r", fmt(*s.fhn.r));
  } else if (s.system == SystemKind::user_polynomial) {
    e.emplace_back("n", std::to_string(s.polynomial.f1.input_dim));
    e.emplace_back("m", std::to_string(s.polynomial.f2.input_dim));
    e.emplace_back("rho1", fmt(s.rho1));
    e.emplace_back("rho2", fmt(s.rho2));
  }
  e.emplace_back("t0", fmt(s.t0));
  e.emplace_back("horizon", fmt(s.horizon));
  e.emplace_back("step", fmt(s.step));
  e.emplace_back("method",
                 s.integrator.method == IntegratorMethod::fixed_rk4 ? "rk4" : "adaptive");
  if (s.integrator.method == IntegratorMethod::adaptive_embedded) {
    e.emplace_back("abs_tol", fmt(s.integrator.abs_tol));
    e.emplace_back("rel_tol", fmt(s.integrator.rel_tol));
  }
  e.emplace_back("output_stride", std::to_string(s.output_stride));
  e.emplace_back("seed", std::to_string(s.seed));
  e.emplace_back("tolerance", fmt(s.tolerance));
  for (std::size_t i = 0; i < s.initial_conditions.size(); ++i)
    e.emplace_back("z" + std::to_string(i + 1), format_vector(s.initial_conditions[i]));
  if (s.action == Action::estimate && s.estimate.random_pairs > 0) {
    e.emplace_back("random_pairs", std::to_string(s.estimate.random_pairs));
    e.emplace_back("box_lo", format_vector(s.estimate.box_lo));
    e.emplace_back("box_hi", format_vector(s.estimate.box_hi));
  }
  if (s.action == Action::estimate) {
    e.emplace_back("transient_skip", fmt(s.estimate.transient_skip));
    e.emplace_back("lambda_min", fmt(s.estimate.lambda_min));
  }
  if (s.action == Action::fc_table) {
    e.emplace_back("points", std::to_string(s.fc_table.points));
    e.emplace_back("table_points", std::to_string(s.fc_table.table_points));
  }
}

TimeVaryingField scenario_field(const Scenario &s) {
  switch (s.system) {
    case SystemKind::builtin_linear: {
      TimeVaryingField f;
      f.dim = s.dim();
      f.eval = [](double, const Vector &z) -> Vector { return -z; };
      const int n = f.dim;
      f.jacobian = [n](double, const Vector &) -> Matrix { return -Matrix::Identity(n, n); };
      f.lipschitz_hint = 1.0;
      return f;
    }
    case SystemKind::fhn:
    case SystemKind::user_polynomial:
      return assemble(scenario_interconnection(s));
  }
  throw std::logic_error("scenario_field: unknown system");
}

Interconnection scenario_interconnection(const Scenario &s) {
  switch (s.system) {
    case SystemKind::fhn: return fhn::fhn_field(s.fhn);
    case SystemKind::user_polynomial:
      return polynomial_interconnection(s.polynomial, s.rho1, s.rho2);
    case SystemKind::builtin_linear: break;
  }
  throw std::logic_error("builtin_linear has no two-block form");
}

}  // namespace incstab::cli
