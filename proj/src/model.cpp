#include "hcast/model.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace hcast {

using ordered_json = nlohmann::ordered_json;

Scheme parse_scheme(const std::string& text) {
  if (text == "ls") return Scheme::Ls;
  if (text == "rls") return Scheme::Rls;
  throw ConfigError("unknown regression scheme '" + text + "' (expected ls or rls)");
}

const char* to_string(Scheme s) { return s == Scheme::Ls ? "ls" : "rls"; }

void ParameterBounds::validate() const {
  if (!(min < init && init < max))
    throw ConfigError("bounds for '" + name + "': need min < init < max");
  if (integer && (min != std::floor(min) || init != std::floor(init) || max != std::floor(max)))
    throw ConfigError("bounds for '" + name + "': integer bounds need integral endpoints");
}

bool ModelSpec::has_input(const std::string& name) const {
  return std::any_of(inputs.begin(), inputs.end(),
                     [&](const auto& p) { return p.first == name; });
}

const std::string& ModelSpec::input_expression(const std::string& name) const {
  for (const auto& [n, src] : inputs)
    if (n == name) return src;
  throw ConfigError("no input named '" + name + "'");
}

std::optional<std::pair<std::string, std::string>> split_param_name(const std::string& name) {
  const auto pos = name.find("__");
  if (pos == std::string::npos || pos == 0 || pos + 2 >= name.size()) return std::nullopt;
  return std::make_pair(name.substr(0, pos), name.substr(pos + 2));
}

expr::ExprPtr ModelSpec::bound_input(const std::string& name, const ParamMap& extra) const {
  expr::ExprPtr ast = expr::parse_expr(input_expression(name));
  auto apply = [&](const std::string& prm_name, Scalar value) {
    auto parts = split_param_name(prm_name);
    if (!parts || parts->first != name) return;
    int replaced = 0;
    ast = expr::bind_named(ast, parts->second, value, &replaced);
    if (replaced == 0)
      throw ConfigError("parameter '" + prm_name + "' matches no named argument in input '" +
                        name + "'");
  };
  for (const auto& [n, v] : prm) apply(n, v);
  for (const auto& [n, v] : extra) apply(n, v);
  return ast;
}

Scalar ModelSpec::effective_lambda() const {
  auto it = prm.find("lambda");
  return it != prm.end() ? it->second : lambda;
}

Mask ModelSpec::scoreperiod(Index n) const {
  Mask mask = all_true(n);
  for (Index i = 0; i < std::min(burnin, n); ++i) mask[i] = false;
  return mask;
}

void ModelSpec::validate() const {
  if (output.empty()) throw ConfigError("model: output name is empty");
  if (inputs.empty()) throw ConfigError("model: no inputs defined");
  for (std::size_t i = 0; i < inputs.size(); ++i)
    for (std::size_t j = i + 1; j < inputs.size(); ++j)
      if (inputs[i].first == inputs[j].first)
        throw ConfigError("model: duplicate input '" + inputs[i].first + "'");
  if (kseq.empty()) throw ConfigError("model: empty horizon list (kseq)");
  for (std::size_t i = 0; i < kseq.size(); ++i) {
    if (kseq[i] < 0) throw ConfigError("model: negative horizon in kseq");
    if (i > 0 && kseq[i] <= kseq[i - 1])
      throw ConfigError("model: kseq must be strictly increasing");
  }
  if (!(lambda > 0.0 && lambda <= 1.0))
    throw ConfigError("model: lambda must be in (0, 1]");
  if (burnin < 0) throw ConfigError("model: negative burnin");
  for (const auto& b : bounds) b.validate();
  // every input__ bound must point at an existing input
  for (const auto& b : bounds) {
    auto parts = split_param_name(b.name);
    if (parts && !has_input(parts->first))
      throw ConfigError("bounds for '" + b.name + "': no input named '" + parts->first + "'");
  }
}

void ModelSpec::seed_parameters() {
  for (const auto& b : bounds) prm.emplace(b.name, b.init);
}

std::vector<int> parse_kseq(const std::string& text) {
  std::vector<int> out;
  auto parse_int = [&](const std::string& s) {
    std::size_t used = 0;
    int v;
    try {
      v = std::stoi(s, &used);
    } catch (...) {
      throw ConfigError("kseq: cannot parse '" + s + "'");
    }
    if (used != s.size()) throw ConfigError("kseq: cannot parse '" + s + "'");
    return v;
  };
  std::stringstream ss(text);
  std::string piece;
  while (std::getline(ss, piece, ',')) {
    const auto colon = piece.find(':');
    if (colon != std::string::npos) {
      const int a = parse_int(piece.substr(0, colon));
      const int b = parse_int(piece.substr(colon + 1));
      if (b < a) throw ConfigError("kseq: descending range '" + piece + "'");
      for (int k = a; k <= b; ++k) out.push_back(k);
    } else if (!piece.empty()) {
      out.push_back(parse_int(piece));
    }
  }
  if (out.empty()) throw ConfigError("kseq: empty horizon list");
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

std::vector<int> kseq_from_json(const ordered_json& j) {
  if (j.is_string()) return parse_kseq(j.get<std::string>());
  if (j.is_array()) {
    std::vector<int> out;
    for (const auto& v : j) {
      if (!v.is_number_integer()) throw ConfigError("kseq: array entries must be integers");
      out.push_back(v.get<int>());
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    if (out.empty()) throw ConfigError("kseq: empty horizon list");
    return out;
  }
  throw ConfigError("kseq: expected a string like \"1:24\" or an integer array");
}

}  // namespace

ModelSpec parse_model_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("model config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("model config: top level must be an object");

  static const std::vector<std::string> known{"output",  "inputs", "regression", "bounds",
                                              "kseq",    "burnin", "provenance"};
  for (const auto& [key, val] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ConfigError("model config: unknown key '" + key + "'");

  ModelSpec m;
  if (!j.contains("output") || !j["output"].is_string())
    throw ConfigError("model config: 'output' (string) is required");
  m.output = j["output"].get<std::string>();

  if (!j.contains("inputs") || !j["inputs"].is_object() || j["inputs"].empty())
    throw ConfigError("model config: 'inputs' (non-empty object) is required");
  for (const auto& [name, val] : j["inputs"].items()) {
    if (!val.is_string())
      throw ConfigError("model config: input '" + name + "' must map to an expression string");
    expr::parse_expr(val.get<std::string>());  // surface syntax errors at load time
    m.inputs.emplace_back(name, val.get<std::string>());
  }

  if (j.contains("regression")) {
    const auto& r = j["regression"];
    if (!r.is_object()) throw ConfigError("model config: 'regression' must be an object");
    for (const auto& [key, val] : r.items()) {
      if (key == "scheme") {
        m.scheme = parse_scheme(val.get<std::string>());
      } else if (key == "lambda") {
        if (!val.is_number()) throw ConfigError("model config: lambda must be a number");
        m.lambda = val.get<Scalar>();
      } else {
        throw ConfigError("model config: unknown regression key '" + key + "'");
      }
    }
  }

  if (j.contains("bounds")) {
    if (!j["bounds"].is_object()) throw ConfigError("model config: 'bounds' must be an object");
    for (const auto& [name, val] : j["bounds"].items()) {
      ParameterBounds b;
      b.name = name;
      if (!val.is_object() || !val.contains("min") || !val.contains("init") || !val.contains("max"))
        throw ConfigError("model config: bounds for '" + name + "' need min/init/max");
      b.min = val["min"].get<Scalar>();
      b.init = val["init"].get<Scalar>();
      b.max = val["max"].get<Scalar>();
      if (val.contains("integer")) b.integer = val["integer"].get<bool>();
      b.validate();
      m.bounds.push_back(std::move(b));
    }
  }

  if (!j.contains("kseq")) throw ConfigError("model config: 'kseq' is required");
  m.kseq = kseq_from_json(j["kseq"]);

  if (j.contains("burnin")) {
    if (!j["burnin"].is_number_integer() || j["burnin"].get<int>() < 0)
      throw ConfigError("model config: 'burnin' must be a non-negative integer");
    m.burnin = j["burnin"].get<Index>();
  }

  m.seed_parameters();
  m.validate();
  return m;
}

ModelSpec load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open model config " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_model_json(text);
}

std::string model_to_json(const ModelSpec& model, const std::string& provenance) {
  ordered_json j;
  j["output"] = model.output;
  ordered_json inputs = ordered_json::object();
  for (const auto& [name, src] : model.inputs) {
    // render with the current parameter values substituted
    inputs[name] = expr::pretty_print(model.bound_input(name));
  }
  j["inputs"] = inputs;
  ordered_json reg;
  reg["scheme"] = to_string(model.scheme);
  reg["lambda"] = model.effective_lambda();
  j["regression"] = reg;
  if (!model.bounds.empty()) {
    ordered_json bounds = ordered_json::object();
    for (const auto& b : model.bounds) {
      ordered_json bj;
      bj["min"] = b.min;
      auto it = model.prm.find(b.name);
      bj["init"] = it != model.prm.end() ? it->second : b.init;
      bj["max"] = b.max;
      if (b.integer) bj["integer"] = true;
      bounds[b.name] = bj;
    }
    j["bounds"] = bounds;
  }
  ordered_json ks = ordered_json::array();
  for (int k : model.kseq) ks.push_back(k);
  j["kseq"] = ks;
  if (model.burnin > 0) j["burnin"] = model.burnin;
  if (!provenance.empty()) j["provenance"] = provenance;
  return j.dump(2) + "\n";
}

void save_model(const ModelSpec& model, const std::string& path, const std::string& provenance) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write model config " + path);
  out << model_to_json(model, provenance);
}

}  // namespace hcast
