#include "hcast/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace hcast::tuning {

Scalar rmse(const Vector& residuals) {
  Scalar ss = 0;
  Index m = 0;
  for (Index i = 0; i < residuals.size(); ++i)
    if (!is_missing(residuals[i])) {
      ss += residuals[i] * residuals[i];
      ++m;
    }
  return m == 0 ? kMissing : std::sqrt(ss / static_cast<Scalar>(m));
}

ScoreReport score(const ResidualMatrix& resid, const Mask& mask) {
  if (mask.size() != resid.rows()) throw DataError("score: mask length mismatch");

  // identical row set across horizons: only the complete cases are scored
  const Mask rows = mask && complete_rows(resid.values);
  const Index used = count_true(rows);
  if (used == 0) throw DataError("score: empty masked set (no complete cases in score period)");

  ScoreReport report;
  report.horizons = resid.horizons;
  report.rows_used = used;
  report.mask_size = count_true(mask);
  report.values.resize(resid.cols());
  for (Index j = 0; j < resid.cols(); ++j) {
    Scalar ss = 0;
    for (Index t = 0; t < resid.rows(); ++t)
      if (rows[t]) ss += resid.values(t, j) * resid.values(t, j);
    report.values[j] = std::sqrt(ss / static_cast<Scalar>(used));
  }
  report.total = report.values.sum();
  return report;
}

Scalar objective(const ParamMap& theta, const ModelSpec& model, const DataSet& data,
                 Scheme scheme, const std::vector<int>& kseq,
                 const std::optional<Mask>& scoreperiod) {
  if (kseq.empty()) throw ConfigError("objective: empty kseq");

  for (const auto& b : model.bounds) {
    auto it = theta.find(b.name);
    if (it != theta.end() && (it->second < b.min || it->second > b.max)) return kPenaltyScore;
  }

  ModelSpec m = model;
  m.kseq = kseq;
  regression::FitOptions opts;
  opts.keep_traces = false;
  opts.scoreperiod = scoreperiod;
  try {
    return regression::fit_score(scheme, theta, m, data, opts);
  } catch (const NumericError&) {
    return kPenaltyScore;  // a diverged fit scores as a penalty, never a crash
  }
}

Scalar bound_to_real(Scalar x, Scalar lo, Scalar hi) {
  const Scalar u = (x - lo) / (hi - lo);
  return std::log(u / (1.0 - u));
}

Scalar real_to_bound(Scalar z, Scalar lo, Scalar hi) {
  const Scalar u = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  return lo + (hi - lo) * u;
}

namespace {

struct NmProblem {
  std::vector<ParameterBounds> free;  // continuous parameters entering the simplex
  ParamMap fixed;                     // integer-flagged and other current values

  ParamMap to_params(const Vector& z) const {
    ParamMap p = fixed;
    for (std::size_t i = 0; i < free.size(); ++i)
      p[free[i].name] = real_to_bound(z[static_cast<Index>(i)], free[i].min, free[i].max);
    return p;
  }
};

}  // namespace

OptimizeResult optimize(ModelSpec& model, const DataSet& data, Scheme scheme,
                        const std::vector<int>& kseq, const OptimizeSettings& settings) {
  if (model.bounds.empty())
    throw ConfigError("optimize: no parameter bounds declared (add_prmbounds equivalent)");
  if (kseq.empty()) throw ConfigError("optimize: empty kseq");
  model.seed_parameters();

  NmProblem prob;
  prob.fixed = model.prm;
  for (const auto& b : model.bounds)
    if (!b.integer) prob.free.push_back(b);

  OptimizeResult result;
  int evaluations = 0;
  Scalar running_best = std::numeric_limits<Scalar>::infinity();

  auto evaluate = [&](const Vector& z) -> Scalar {
    const ParamMap p = prob.to_params(z);
    for (const auto& b : prob.free) {
      const Scalar v = p.at(b.name);
      if (!(v > b.min && v < b.max))
        throw NumericError("optimize: evaluation left bounds for '" + b.name + "'");
    }
    const Scalar s = objective(p, model, data, scheme, kseq, settings.scoreperiod);
    TraceEntry entry;
    entry.evaluation = ++evaluations;
    entry.params = p;
    entry.score = s;
    entry.improved = s < running_best;
    running_best = std::min(running_best, s);
    result.trace.push_back(entry);
    return s;
  };

  const Index d = static_cast<Index>(prob.free.size());
  if (d == 0) {
    // only integer parameters: evaluate the current point and return it
    Vector z0(0);
    result.init_score = result.best_score = evaluate(z0);
    result.best = prob.fixed;
    result.evaluations = evaluations;
    model.prm = result.best;
    return result;
  }

  Vector z0(d);
  for (Index i = 0; i < d; ++i) {
    const auto& b = prob.free[static_cast<std::size_t>(i)];
    z0[i] = bound_to_real(model.prm.at(b.name), b.min, b.max);
  }

  // initial simplex: perturb one mapped coordinate per vertex
  std::vector<Vector> x(static_cast<std::size_t>(d) + 1, z0);
  for (Index i = 0; i < d; ++i)
    x[static_cast<std::size_t>(i) + 1][i] += std::max(0.25, 0.1 * std::abs(z0[i]));

  // vertices evaluated sequentially so the trace order is deterministic
  Vector fx(d + 1);
  for (Index i = 0; i <= d; ++i) fx[i] = evaluate(x[static_cast<std::size_t>(i)]);
  result.init_score = fx[0];

  constexpr Scalar alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;
  int iter = 0;
  for (; iter < settings.max_iterations; ++iter) {
    // order vertices by score
    std::vector<Index> idx(static_cast<std::size_t>(d) + 1);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return fx[a] < fx[b]; });
    std::vector<Vector> xs;
    Vector fxs(d + 1);
    for (Index i = 0; i <= d; ++i) {
      xs.push_back(x[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])]);
      fxs[i] = fx[idx[static_cast<std::size_t>(i)]];
    }
    x = std::move(xs);
    fx = fxs;

    if (fx[d] - fx[0] < settings.tolerance) break;

    Vector centroid = Vector::Zero(d);
    for (Index i = 0; i < d; ++i) centroid += x[static_cast<std::size_t>(i)];
    centroid /= static_cast<Scalar>(d);

    const Vector xr = centroid + alpha * (centroid - x[static_cast<std::size_t>(d)]);
    const Scalar fr = evaluate(xr);
    if (fr < fx[0]) {
      const Vector xe = centroid + gamma * (xr - centroid);
      const Scalar fe = evaluate(xe);
      if (fe < fr) {
        x[static_cast<std::size_t>(d)] = xe;
        fx[d] = fe;
      } else {
        x[static_cast<std::size_t>(d)] = xr;
        fx[d] = fr;
      }
    } else if (fr < fx[d - 1]) {
      x[static_cast<std::size_t>(d)] = xr;
      fx[d] = fr;
    } else {
      const bool outside = fr < fx[d];
      const Vector xc =
          centroid + rho * ((outside ? xr : x[static_cast<std::size_t>(d)]) - centroid);
      const Scalar fc = evaluate(xc);
      if (fc < (outside ? fr : fx[d])) {
        x[static_cast<std::size_t>(d)] = xc;
        fx[d] = fc;
      } else {
        for (Index i = 1; i <= d; ++i) {
          x[static_cast<std::size_t>(i)] =
              x[0] + sigma * (x[static_cast<std::size_t>(i)] - x[0]);
          fx[i] = evaluate(x[static_cast<std::size_t>(i)]);
        }
      }
    }
  }
  result.iterations = iter;
  result.evaluations = evaluations;

  // best evaluated point (never worse than the init vertex)
  const auto best_it =
      std::min_element(result.trace.begin(), result.trace.end(),
                       [](const auto& a, const auto& b) { return a.score < b.score; });
  if (best_it == result.trace.end() || best_it->score >= kPenaltyScore) {
    std::ostringstream os;
    os << "optimize: no finite objective value in " << evaluations << " evaluations;";
    for (const auto& e : result.trace) os << " f" << e.evaluation << "=" << e.score;
    throw NumericError(os.str());
  }
  result.best = best_it->params;
  result.best_score = best_it->score;

  // a forgetting factor sitting at its upper bound usually means no
  // systematic change occurred in the tuning period; report, don't act
  for (const auto& b : prob.free) {
    if (b.name != "lambda") continue;
    const Scalar v = result.best.at(b.name);
    if (b.max - v < 1e-3 * (b.max - b.min))
      result.warnings.push_back("optimize: lambda " + format_shortest(v) +
                                " is at its upper bound " + format_shortest(b.max));
  }

  model.prm = result.best;
  return result;
}

}  // namespace hcast::tuning
