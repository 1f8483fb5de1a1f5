#include "hcast/transform.hpp"

#include "hcast/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hcast::transform {

ForecastMatrix one(Index n, const std::vector<int>& horizons) {
  return ForecastMatrix::ones(n, horizons);
}

ForecastMatrix lp(const ForecastMatrix& u, Scalar a1, Vector& memory) {
  if (!(a1 >= 0.0 && a1 < 1.0))
    throw ConfigError("lp: a1 must be in [0,1), got " + format_shortest(a1));
  if (memory.size() == 0) memory = Vector::Constant(u.cols(), kMissing);
  if (memory.size() != u.cols()) throw StateError("lp: filter memory has wrong column count");

  ForecastMatrix out;
  out.horizons = u.horizons;
  out.values.resize(u.rows(), u.cols());
  for (Index j = 0; j < u.cols(); ++j) {
    Scalar mem = memory[j];
    for (Index t = 0; t < u.rows(); ++t) {
      const Scalar v = u.values(t, j);
      if (is_missing(v)) {
        out.values(t, j) = kMissing;  // memory unchanged
        continue;
      }
      // memory starts at the first non-missing value, so the filter has no
      // start-up transient on constant input
      mem = is_missing(mem) ? v : a1 * mem + (1.0 - a1) * v;
      out.values(t, j) = mem;
    }
    memory[j] = mem;
  }
  return out;
}

namespace {

// Type-7 quantile (linear interpolation) of sorted values.
Scalar quantile_sorted(const std::vector<Scalar>& sorted, Scalar p) {
  const std::size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const Scalar h = p * static_cast<Scalar>(n - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, n - 1);
  return sorted[lo] + (h - static_cast<Scalar>(lo)) * (sorted[hi] - sorted[lo]);
}

// All basis values at x for the padded knot vector T (boundary knots
// repeated degree+1 times). x is assumed clamped to the boundary.
Vector bspline_basis_all(Scalar x, int degree, const Vector& T) {
  const Index nb = T.size() - degree - 1;
  Vector basis = Vector::Zero(nb);

  // knot span: largest i in [degree, nb-1] with T[i] <= x < T[i+1]
  Index span = degree;
  if (x >= T[nb]) {
    span = nb - 1;
  } else {
    while (span + 1 < nb && x >= T[span + 1]) ++span;
  }

  // de Boor triangle over the degree+1 non-zero functions
  std::vector<Scalar> N(static_cast<std::size_t>(degree) + 1, 0.0);
  std::vector<Scalar> left(N.size()), right(N.size());
  N[0] = 1.0;
  for (int j = 1; j <= degree; ++j) {
    left[static_cast<std::size_t>(j)] = x - T[span + 1 - j];
    right[static_cast<std::size_t>(j)] = T[span + j] - x;
    Scalar saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const Scalar den = right[static_cast<std::size_t>(r) + 1] + left[static_cast<std::size_t>(j - r)];
      const Scalar temp = den != 0.0 ? N[static_cast<std::size_t>(r)] / den : 0.0;
      N[static_cast<std::size_t>(r)] = saved + right[static_cast<std::size_t>(r) + 1] * temp;
      saved = left[static_cast<std::size_t>(j - r)] * temp;
    }
    N[static_cast<std::size_t>(j)] = saved;
  }
  for (int j = 0; j <= degree; ++j) basis[span - degree + j] = N[static_cast<std::size_t>(j)];
  return basis;
}

}  // namespace

std::vector<ForecastMatrix> bspline(const ForecastMatrix& u, int df, int degree, bool intercept,
                                    SplineState& state) {
  if (degree < 1) throw ConfigError("bspline: degree must be >= 1");
  const int min_df = degree + (intercept ? 1 : 0);
  if (df < min_df)
    throw ConfigError("bspline: df too small (need >= " + std::to_string(min_df) + ", got " +
                      std::to_string(df) + ")");
  const int interior = df - degree - (intercept ? 1 : 0);
  const Index nbasis_total = interior + degree + 1;

  if (!state.frozen) {
    std::vector<Scalar> pooled;
    pooled.reserve(static_cast<std::size_t>(u.values.size()));
    for (Index j = 0; j < u.cols(); ++j)
      for (Index t = 0; t < u.rows(); ++t)
        if (!is_missing(u.values(t, j))) pooled.push_back(u.values(t, j));
    if (pooled.empty()) throw DataError("bspline: all-missing input in the fit period");
    std::sort(pooled.begin(), pooled.end());
    const Scalar lo = pooled.front(), hi = pooled.back();
    if (!(hi > lo)) throw DataError("bspline: constant input cannot be resolved into a basis");

    // boundary knots repeated degree+1 times; interior knots at
    // equidistant quantiles of the pooled values
    Vector T(nbasis_total + degree + 1);
    Index pos = 0;
    for (int i = 0; i <= degree; ++i) T[pos++] = lo;
    for (int i = 1; i <= interior; ++i)
      T[pos++] = quantile_sorted(pooled, static_cast<Scalar>(i) / static_cast<Scalar>(interior + 1));
    for (int i = 0; i <= degree; ++i) T[pos++] = hi;
    state.knots = std::move(T);
    state.frozen = true;
  }
  const Vector& T = state.knots;
  if (T.size() != nbasis_total + degree + 1)
    throw StateError("bspline: frozen knot vector does not match df/degree");
  const Scalar lo = T[0], hi = T[T.size() - 1];

  std::vector<ForecastMatrix> out(static_cast<std::size_t>(df));
  for (auto& m : out) {
    m.horizons = u.horizons;
    m.values = Matrix::Constant(u.rows(), u.cols(), kMissing);
  }
  const Index first = intercept ? 0 : 1;
  for (Index j = 0; j < u.cols(); ++j) {
    for (Index t = 0; t < u.rows(); ++t) {
      Scalar x = u.values(t, j);
      if (is_missing(x)) continue;
      x = std::clamp(x, lo, hi);
      const Vector basis = bspline_basis_all(x, degree, T);
      for (int b = 0; b < df; ++b) out[static_cast<std::size_t>(b)].values(t, j) = basis[first + b];
    }
  }
  return out;
}

std::vector<ForecastMatrix> fs(const ForecastMatrix& u, int nharmonics) {
  if (nharmonics < 1) throw ConfigError("fs: nharmonics must be >= 1");
  std::vector<ForecastMatrix> out;
  out.reserve(static_cast<std::size_t>(2 * nharmonics));
  for (int j = 1; j <= nharmonics; ++j) {
    const Scalar w = 2.0 * std::numbers::pi_v<Scalar> * j;
    ForecastMatrix s, c;
    s.horizons = c.horizons = u.horizons;
    s.values = (u.values.array() * w).sin();
    c.values = (u.values.array() * w).cos();
    out.push_back(std::move(s));
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<ForecastMatrix> ar(const Vector& y, const std::vector<int>& lags,
                               const std::vector<int>& horizons, ArState& state) {
  for (int l : lags)
    if (l < 0) throw ConfigError("AR: negative lag " + std::to_string(l));
  for (std::size_t i = 0; i < lags.size(); ++i)
    for (std::size_t j = i + 1; j < lags.size(); ++j)
      if (lags[i] == lags[j]) throw ConfigError("AR: duplicate lag " + std::to_string(lags[i]));

  const int max_lag = lags.empty() ? 0 : *std::max_element(lags.begin(), lags.end());
  if (state.consumed == 0 && state.tail.empty()) state.max_lag = max_lag;
  if (state.max_lag < max_lag)
    throw StateError("AR: stored history covers lag " + std::to_string(state.max_lag) +
                     ", expression needs lag " + std::to_string(max_lag));

  const Index n = y.size();
  // value of y at global 1-based index g, from the tail or the batch
  auto y_at = [&](std::int64_t g) -> Scalar {
    if (g < 1) return kMissing;
    if (g > state.consumed) return y[static_cast<Index>(g - state.consumed - 1)];
    const std::int64_t back = state.consumed - g;  // 0 = most recent consumed
    if (back >= static_cast<std::int64_t>(state.tail.size())) return kMissing;
    return state.tail[state.tail.size() - 1 - static_cast<std::size_t>(back)];
  };

  std::vector<ForecastMatrix> out;
  out.reserve(lags.size());
  for (int l : lags) {
    ForecastMatrix m;
    m.horizons = horizons;
    m.values.resize(n, static_cast<Index>(horizons.size()));
    for (Index i = 0; i < n; ++i) {
      const Scalar v = y_at(state.consumed + i + 1 - l);
      m.values.row(i).setConstant(v);
    }
    out.push_back(std::move(m));
  }

  for (Index i = 0; i < n; ++i) state.tail.push_back(y[i]);
  if (state.tail.size() > static_cast<std::size_t>(state.max_lag))
    state.tail.erase(state.tail.begin(),
                     state.tail.end() - static_cast<std::ptrdiff_t>(state.max_lag));
  state.consumed += n;
  return out;
}

std::vector<ForecastMatrix> multiply(const std::vector<ForecastMatrix>& a,
                                     const std::vector<ForecastMatrix>& b,
                                     const std::string& a_label, const std::string& b_label) {
  if (a.empty() || b.empty())
    throw ConfigError("%**%: empty operand (" + (a.empty() ? a_label : b_label) + ")");
  const auto& ref = a.front();
  auto check = [&](const ForecastMatrix& m, const std::string& label) {
    if (m.rows() != ref.rows() || m.horizons != ref.horizons)
      throw ConfigError("%**%: horizon mismatch between '" + a_label + "' and '" + b_label +
                        "' (" + label + ")");
  };
  for (const auto& m : a) check(m, a_label);
  for (const auto& m : b) check(m, b_label);

  std::vector<ForecastMatrix> out;
  out.reserve(a.size() * b.size());
  for (const auto& ma : a)
    for (const auto& mb : b) {
      ForecastMatrix m;
      m.horizons = ref.horizons;
      m.values = ma.values.cwiseProduct(mb.values);
      out.push_back(std::move(m));
    }
  return out;
}

// ---- expression evaluation -------------------------------------------------

namespace {

struct TValue {
  enum class Kind { Scalar, Ints, Mats };
  Kind kind = Kind::Scalar;
  Scalar scalar = 0;
  std::vector<int> ints;
  std::vector<ForecastMatrix> mats;

  static TValue of(Scalar v) {
    TValue t;
    t.kind = Kind::Scalar;
    t.scalar = v;
    return t;
  }
  static TValue of(std::vector<int> v) {
    TValue t;
    t.kind = Kind::Ints;
    t.ints = std::move(v);
    return t;
  }
  static TValue of(std::vector<ForecastMatrix> v) {
    TValue t;
    t.kind = Kind::Mats;
    t.mats = std::move(v);
    return t;
  }
};

struct EvalCtx {
  const DataSet& data;
  const std::string& output;
  const std::vector<int>& horizons;
  TransformState& state;
  std::string input_name;
  int node_counter = 0;

  std::string next_key() { return input_name + "#" + std::to_string(node_counter++); }
};

TValue eval(const expr::ExprPtr& e, EvalCtx& ctx);

Scalar eval_scalar(const expr::ExprPtr& e, EvalCtx& ctx, const std::string& what) {
  TValue v = eval(e, ctx);
  if (v.kind != TValue::Kind::Scalar)
    throw ConfigError(ctx.input_name + ": " + what + " must be a number");
  return v.scalar;
}

int eval_int(const expr::ExprPtr& e, EvalCtx& ctx, const std::string& what) {
  const Scalar v = eval_scalar(e, ctx, what);
  if (v != std::floor(v)) throw ConfigError(ctx.input_name + ": " + what + " must be an integer");
  return static_cast<int>(v);
}

const expr::ExprPtr* find_named(const expr::Node& call, const std::string& name) {
  for (const auto& [n, v] : call.named)
    if (n == name) return &v;
  return nullptr;
}

// Positional-or-named argument lookup; every named argument must be known.
const expr::ExprPtr* find_arg(const expr::Node& call, std::size_t pos, const std::string& name) {
  if (pos < call.args.size()) return &call.args[pos];
  return find_named(call, name);
}

void check_named(const expr::Node& call, std::initializer_list<const char*> known,
                 const std::string& input) {
  for (const auto& [n, v] : call.named) {
    bool ok = false;
    for (const char* k : known)
      if (n == k) ok = true;
    if (!ok)
      throw ConfigError(input + ": " + call.name + ": unknown argument '" + n + "'");
  }
}

TValue eval_variable(const std::string& name, EvalCtx& ctx) {
  if (ctx.data.has_forecast(name)) {
    try {
      return TValue::of({ctx.data.forecast(name).select_horizons(ctx.horizons)});
    } catch (const DataError& e) {
      throw DataError("input '" + ctx.input_name + "': forecast matrix '" + name +
                      "': " + e.what());
    }
  }
  if (ctx.data.has_observation(name)) {
    // observed at the origin: the value is known at time t for every horizon
    const Vector& v = ctx.data.observation(name);
    ForecastMatrix m;
    m.horizons = ctx.horizons;
    m.values.resize(v.size(), static_cast<Index>(ctx.horizons.size()));
    for (Index t = 0; t < v.size(); ++t) m.values.row(t).setConstant(v[t]);
    return TValue::of({std::move(m)});
  }
  throw ConfigError("input '" + ctx.input_name + "': unknown variable '" + name + "'");
}

TValue eval_call(const expr::Node& c, EvalCtx& ctx) {
  if (c.name == "one") {
    check_named(c, {}, ctx.input_name);
    if (!c.args.empty()) throw ConfigError(ctx.input_name + ": one() takes no arguments");
    return TValue::of({one(ctx.data.rows(), ctx.horizons)});
  }

  if (c.name == "lp") {
    check_named(c, {"a1"}, ctx.input_name);
    const auto* ue = find_arg(c, 0, "");
    const auto* ae = find_arg(c, 1, "a1");
    if (!ue || !ae) throw ConfigError(ctx.input_name + ": lp(u, a1=...) needs both arguments");
    const std::string key = ctx.next_key();
    TValue u = eval(*ue, ctx);
    if (u.kind != TValue::Kind::Mats)
      throw ConfigError(ctx.input_name + ": lp: first argument must be forecast matrices");
    const Scalar a1 = eval_scalar(*ae, ctx, "lp a1");

    auto [it, fresh] = ctx.state.kernels.try_emplace(key, LpState{});
    auto* lps = std::get_if<LpState>(&it->second);
    if (!lps) throw StateError("state key '" + key + "' is not an lp state");
    if (fresh) lps->memory.resize(u.mats.size());
    if (lps->memory.size() != u.mats.size())
      throw StateError("lp: state holds " + std::to_string(lps->memory.size()) +
                       " matrices, input has " + std::to_string(u.mats.size()));
    std::vector<ForecastMatrix> out;
    out.reserve(u.mats.size());
    for (std::size_t i = 0; i < u.mats.size(); ++i)
      out.push_back(lp(u.mats[i], a1, lps->memory[i]));
    return TValue::of(std::move(out));
  }

  if (c.name == "bspline") {
    check_named(c, {"df", "degree", "intercept"}, ctx.input_name);
    const auto* ue = find_arg(c, 0, "");
    const auto* dfe = find_arg(c, 1, "df");
    if (!ue || !dfe) throw ConfigError(ctx.input_name + ": bspline(u, df=...) needs both arguments");
    const std::string key = ctx.next_key();
    TValue u = eval(*ue, ctx);
    if (u.kind != TValue::Kind::Mats || u.mats.size() != 1)
      throw ConfigError(ctx.input_name + ": bspline expects a single forecast matrix input");
    const int df = eval_int(*dfe, ctx, "bspline df");
    const auto* dege = find_named(c, "degree");
    const auto* inte = find_named(c, "intercept");
    const int degree = dege ? eval_int(*dege, ctx, "bspline degree") : 3;
    const bool intercept = inte ? eval_scalar(*inte, ctx, "bspline intercept") != 0.0 : false;

    auto [it, fresh] = ctx.state.kernels.try_emplace(key, SplineState{});
    auto* st = std::get_if<SplineState>(&it->second);
    if (!st) throw StateError("state key '" + key + "' is not a bspline state");
    return TValue::of(bspline(u.mats[0], df, degree, intercept, *st));
  }

  if (c.name == "fs") {
    check_named(c, {"nharmonics"}, ctx.input_name);
    const auto* ue = find_arg(c, 0, "");
    const auto* nhe = find_arg(c, 1, "nharmonics");
    if (!ue || !nhe)
      throw ConfigError(ctx.input_name + ": fs(u, nharmonics=...) needs both arguments");
    TValue u = eval(*ue, ctx);
    if (u.kind != TValue::Kind::Mats || u.mats.size() != 1)
      throw ConfigError(ctx.input_name + ": fs expects a single forecast matrix input");
    return TValue::of(fs(u.mats[0], eval_int(*nhe, ctx, "fs nharmonics")));
  }

  if (c.name == "AR") {
    check_named(c, {"lags"}, ctx.input_name);
    const auto* le = find_arg(c, 0, "lags");
    if (!le) throw ConfigError(ctx.input_name + ": AR(c(...)) needs a lag vector");
    const std::string key = ctx.next_key();
    TValue lv = eval(*le, ctx);
    if (lv.kind != TValue::Kind::Ints)
      throw ConfigError(ctx.input_name + ": AR lags must be an integer vector c(...)");
    if (!ctx.data.has_observation(ctx.output))
      throw DataError(ctx.input_name + ": AR needs output series '" + ctx.output +
                      "' in the data");

    auto [it, fresh] = ctx.state.kernels.try_emplace(key, ArState{});
    auto* st = std::get_if<ArState>(&it->second);
    if (!st) throw StateError("state key '" + key + "' is not an AR state");
    return TValue::of(ar(ctx.data.observation(ctx.output), lv.ints, ctx.horizons, *st));
  }

  throw ConfigError("input '" + ctx.input_name + "': unknown function '" + c.name + "'");
}

TValue eval_binary(const expr::Node& b, EvalCtx& ctx) {
  TValue lhs = eval(b.lhs, ctx);
  TValue rhs = eval(b.rhs, ctx);

  if (b.op == expr::BinOp::HMul) {
    if (lhs.kind != TValue::Kind::Mats || rhs.kind != TValue::Kind::Mats)
      throw ConfigError(ctx.input_name + ": %**% operands must be forecast matrix lists");
    return TValue::of(
        multiply(lhs.mats, rhs.mats, expr::pretty_print(b.lhs), expr::pretty_print(b.rhs)));
  }

  if (lhs.kind == TValue::Kind::Ints || rhs.kind == TValue::Kind::Ints)
    throw ConfigError(ctx.input_name + ": c(...) vectors cannot enter arithmetic");

  auto apply = [&](Scalar x, Scalar y) -> Scalar {
    switch (b.op) {
      case expr::BinOp::Add: return x + y;
      case expr::BinOp::Sub: return x - y;
      case expr::BinOp::Mul: return x * y;
      case expr::BinOp::Div: return x / y;
      default: return kMissing;
    }
  };

  if (lhs.kind == TValue::Kind::Scalar && rhs.kind == TValue::Kind::Scalar)
    return TValue::of(apply(lhs.scalar, rhs.scalar));

  if (lhs.kind == TValue::Kind::Mats && rhs.kind == TValue::Kind::Mats)
    throw ConfigError(ctx.input_name + ": matrix " + expr::to_string(b.op) +
                      " matrix is not defined; use %**% for per-horizon products");

  // matrix (.) scalar, elementwise; missing propagates through the arithmetic
  const bool mats_left = lhs.kind == TValue::Kind::Mats;
  std::vector<ForecastMatrix>& mats = mats_left ? lhs.mats : rhs.mats;
  const Scalar s = mats_left ? rhs.scalar : lhs.scalar;
  for (auto& m : mats) {
    for (Index j = 0; j < m.cols(); ++j)
      for (Index t = 0; t < m.rows(); ++t) {
        Scalar& v = m.values(t, j);
        v = mats_left ? apply(v, s) : apply(s, v);
      }
  }
  return TValue::of(std::move(mats));
}

TValue eval(const expr::ExprPtr& e, EvalCtx& ctx) {
  switch (e->kind) {
    case expr::Node::Kind::Number: return TValue::of(e->number);
    case expr::Node::Kind::IntVector: return TValue::of(e->ivec);
    case expr::Node::Kind::Variable: return eval_variable(e->name, ctx);
    case expr::Node::Kind::Call: return eval_call(*e, ctx);
    case expr::Node::Kind::Binary: return eval_binary(*e, ctx);
  }
  throw ConfigError("corrupt expression node");
}

}  // namespace

TransformResult eval_transform(const ModelSpec& model, const DataSet& data,
                               const TransformState& state) {
  TransformResult result;
  result.state = state;

  for (const auto& [name, source] : model.inputs) {
    EvalCtx ctx{data, model.output, model.kseq, result.state, name};
    TValue v = eval(model.bound_input(name), ctx);
    if (v.kind != TValue::Kind::Mats || v.mats.empty())
      throw ConfigError("input '" + name + "' does not produce forecast matrices");
    for (const auto& m : v.mats)
      if (m.rows() != data.rows())
        throw DataError("input '" + name + "': row count mismatch against the data");
    result.inputs.emplace_back(name, std::move(v.mats));
  }

  result.state.rows_seen += data.rows();
  return result;
}

}  // namespace hcast::transform
