#pragma once

#include "hcast/expr.hpp"
#include "hcast/types.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace hcast {

enum class Scheme { Ls, Rls };

Scheme parse_scheme(const std::string& text);
const char* to_string(Scheme s);

/// Box bounds of one offline parameter. Names use the double-underscore
/// convention `input__param` for transformation parameters and bare names
/// (e.g. "lambda") for regression-scheme parameters.
struct ParameterBounds {
  std::string name;
  Scalar min = 0, init = 0, max = 0;
  bool integer = false;

  void validate() const;  // min < init < max; integral endpoints if integer
};

using ParamMap = std::map<std::string, Scalar>;

/// Model definition: output series, ordered input transformation
/// expressions, regression scheme parameters, offline-parameter bounds,
/// horizon list and score-period burn-in.
struct ModelSpec {
  std::string output;
  std::vector<std::pair<std::string, std::string>> inputs;  // name -> expression
  Scheme scheme = Scheme::Rls;
  Scalar lambda = 0.9;
  std::vector<ParameterBounds> bounds;
  std::vector<int> kseq;
  Index burnin = 0;

  /// Current offline-parameter values (bounds' init until optimized).
  ParamMap prm;

  bool has_input(const std::string& name) const;
  const std::string& input_expression(const std::string& name) const;

  /// Input AST with all `input__param` values from `prm` (plus `extra`)
  /// bound into the named arguments. Unknown parameter names are errors.
  expr::ExprPtr bound_input(const std::string& name, const ParamMap& extra = {}) const;

  /// Effective lambda: prm["lambda"] when bound, otherwise the spec value.
  Scalar effective_lambda() const;

  /// Score-period mask: burn-in rows excluded at the start.
  Mask scoreperiod(Index n) const;

  void validate() const;

  /// Seeds prm with every bound's init value (keeps existing entries).
  void seed_parameters();
};

/// Splits "input__param" into its two parts; nullopt for bare names.
std::optional<std::pair<std::string, std::string>> split_param_name(const std::string& name);

/// "A:B" ranges and comma lists, e.g. "1:24" or "3,18".
std::vector<int> parse_kseq(const std::string& text);

/// Model configuration file (JSON; schema documented in the README).
ModelSpec load_model(const std::string& path);
ModelSpec parse_model_json(const std::string& text);
void save_model(const ModelSpec& model, const std::string& path,
                const std::string& provenance = "");
std::string model_to_json(const ModelSpec& model, const std::string& provenance = "");

}  // namespace hcast
