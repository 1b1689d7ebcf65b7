#pragma once

#include "incstab/cli/polynomial.hpp"
#include "incstab/dynsys.hpp"
#include "incstab/fhn.hpp"
#include "incstab/keyvalue.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace incstab::cli {

enum class SystemKind { fhn, builtin_linear, user_polynomial };
enum class Action { simulate, certify, estimate, invariant_set, fc_table, figures };

const char *to_string(SystemKind s);
/// Subcommand spelling (`invariant-set`, `fc-table`, ...).
const char *to_string(Action a);
std::optional<Action> parse_action(const std::string &text);

/// Config-level problem: unknown key, bad value, failed constraint. Carries the
/// offending line when one is known.
class ConfigError : public ParseError {
 public:
  using ParseError::ParseError;
};

struct EstimateSettings {
  std::size_t random_pairs = 0;
  Vector box_lo;
  Vector box_hi;
  double transient_skip = 0.2;
  double lambda_min = 1e-3;
  unsigned threads = 0;
};

struct CertifySettings {
  std::optional<double> radius;  // from find_invariant_level when absent
  std::optional<double> alpha;   // half of min(alpha1, alpha2) when absent
  bool use_param_gains = false;  // check (rho1, rho2) from [params] instead of the budget
  int grid_density = 201;
  double safety_factor = 1.05;
  std::size_t samples = 4000;
  double margin_m = 0.1;
};

struct InvariantSettings {
  double level_min = 1e-2;
  double level_max = 1e3;
  int level_count = 80;
  int grid_density = 101;
  double shell_width = 0.05;
};

struct FcTableSettings {
  int points = 401;
  int table_points = 2048;
};

struct Scenario {
  std::string name = "scenario";
  SystemKind system = SystemKind::fhn;
  Action action = Action::simulate;
  fhn::FhnParams fhn;
  PolynomialBlocks polynomial;
  double rho1 = 1.0;  // user_polynomial gains
  double rho2 = 1.0;
  double t0 = 0.0;
  double horizon = 10.0;
  double step = 1e-3;
  IntegratorConfig integrator;
  std::size_t output_stride = 1;
  std::vector<Vector> initial_conditions;
  std::filesystem::path output_path = ".";
  std::uint64_t seed = 0;
  double tolerance = 1e-9;
  EstimateSettings estimate;
  CertifySettings certify;
  InvariantSettings invariant;
  FcTableSettings fc_table;

  /// Resolved settings (defaults included) in a stable order.
  std::vector<std::pair<std::string, std::string>> echo;

  int dim() const;
};

/// Strict parse: unknown sections or keys, duplicate keys, malformed numbers
/// and violated constraints throw ConfigError anchored at the offending line.
Scenario parse_config(std::istream &in, const std::string &source, Action action);
Scenario parse_config(const std::filesystem::path &path, Action action);
/// Scenario with every key at its default (used by `figures` without --config).
Scenario default_scenario(Action action);

/// Rebuilds `echo` from the current field values.
void refresh_echo(Scenario &s);

/// Dynamics of the scenario as a single field on R^{n+m}.
TimeVaryingField scenario_field(const Scenario &s);
/// Two-block form; only meaningful for fhn and user_polynomial.
Interconnection scenario_interconnection(const Scenario &s);

Vector parse_vector(const std::string &text);
std::string format_vector(const Vector &v);

}  // namespace incstab::cli
