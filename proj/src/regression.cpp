#include "hcast/regression.hpp"

#include "hcast/threading.hpp"
#include "hcast/tuning.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hcast::regression {

namespace {

constexpr Scalar kInitialP = 1e4;  // P0 = 10000 * I, beta0 = 0

bool row_complete(const Matrix& X, Index t) {
  for (Index j = 0; j < X.cols(); ++j)
    if (is_missing(X(t, j))) return false;
  return true;
}

ModelSpec with_params(const ModelSpec& model, const ParamMap& params) {
  ModelSpec m = model;
  for (const auto& [k, v] : params) m.prm[k] = v;
  return m;
}

Mask effective_scoreperiod(const ModelSpec& model, Index n, const FitOptions& opts) {
  if (!opts.scoreperiod) return model.scoreperiod(n);
  if (opts.scoreperiod->size() != n) throw DataError("scoreperiod mask length mismatch");
  return *opts.scoreperiod;
}

const Vector& output_series(const ModelSpec& model, const DataSet& data) {
  if (!data.has_observation(model.output))
    throw DataError("output series '" + model.output + "' not found in the data");
  return data.observation(model.output);
}

void finish_scores(FitResult& fit, const Vector& y, const Mask& scoreperiod, Index p) {
  fit.resid = residuals(fit.yhat, y);
  const auto report = tuning::score(fit.resid, scoreperiod);
  fit.horizon_rmse = report.values;
  fit.score_sum = report.total;
  fit.score_mask = scoreperiod && complete_rows(fit.resid.values);

  const Index nk = static_cast<Index>(fit.horizons.size());
  fit.sigma2 = Vector::Constant(nk, kMissing);
  for (Index i = 0; i < nk; ++i) {
    Scalar ss = 0;
    Index m = 0;
    for (Index t = 0; t < fit.resid.rows(); ++t)
      if (fit.score_mask[t]) {
        ss += fit.resid.values(t, i) * fit.resid.values(t, i);
        ++m;
      }
    if (m > p) fit.sigma2[i] = ss / static_cast<Scalar>(m - p);
  }
}

}  // namespace

DesignSet build_design(
    const std::vector<std::pair<std::string, std::vector<ForecastMatrix>>>& inputs,
    const Vector& y, const std::vector<int>& horizons) {
  Index p = 0;
  for (const auto& [name, mats] : inputs) p += static_cast<Index>(mats.size());
  if (p == 0) throw ConfigError("build_design: zero regressors");

  DesignSet ds;
  ds.horizons = horizons;
  ds.p = p;
  for (const auto& [name, mats] : inputs) {
    for (std::size_t i = 0; i < mats.size(); ++i)
      ds.colnames.push_back(mats.size() == 1 ? name : name + "." + std::to_string(i + 1));
  }

  const Index n = inputs.front().second.front().rows();
  ds.n = n;
  for (int k : horizons) {
    Matrix X(n, p);
    Index col = 0;
    for (const auto& [name, mats] : inputs) {
      for (const auto& m : mats) {
        if (m.rows() != n) throw DataError("build_design: row mismatch in input '" + name + "'");
        X.col(col++) = m.values.col(m.col_index(k));
      }
    }
    Vector yk = Vector::Constant(n, kMissing);
    if (y.size() != n && y.size() != 0) throw DataError("build_design: output length mismatch");
    if (y.size() == n)
      for (Index t = 0; t + k < n; ++t) yk[t] = y[t + k];
    ds.X.push_back(std::move(X));
    ds.y.push_back(std::move(yk));
  }
  return ds;
}

FitResult ls_fit(const ParamMap& params, const ModelSpec& model, const DataSet& data,
                 const FitOptions& opts) {
  const ModelSpec m = with_params(model, params);
  m.validate();
  const Vector& y = output_series(m, data);

  const auto transformed = transform::eval_transform(m, data, transform::TransformState{});
  const DesignSet design = build_design(transformed.inputs, y, m.kseq);
  const Index n = design.n, p = design.p;
  const Index nk = static_cast<Index>(m.kseq.size());

  FitResult fit;
  fit.horizons = m.kseq;
  fit.colnames = design.colnames;
  fit.yhat.horizons = m.kseq;
  fit.yhat.values = Matrix::Constant(n, nk, kMissing);
  fit.coefficients.assign(static_cast<std::size_t>(nk), Vector());
  if (opts.keep_traces) fit.coef_trace.assign(static_cast<std::size_t>(nk), Matrix());
  std::vector<std::string> warnings(static_cast<std::size_t>(nk));

  parallel_for(nk, opts.threads, [&](Index i) {
    const Matrix& X = design.X[static_cast<std::size_t>(i)];
    const Vector& yk = design.y[static_cast<std::size_t>(i)];

    std::vector<Index> usable;
    for (Index t = 0; t < n; ++t)
      if (!is_missing(yk[t]) && row_complete(X, t)) usable.push_back(t);
    if (static_cast<Index>(usable.size()) < p)
      throw DataError("ls_fit: horizon k" + std::to_string(m.kseq[static_cast<std::size_t>(i)]) +
                      ": " + std::to_string(usable.size()) + " complete rows for " +
                      std::to_string(p) + " regressors");

    Matrix Xc(static_cast<Index>(usable.size()), p);
    Vector yc(static_cast<Index>(usable.size()));
    for (Index r = 0; r < Xc.rows(); ++r) {
      Xc.row(r) = X.row(usable[static_cast<std::size_t>(r)]);
      yc[r] = yk[usable[static_cast<std::size_t>(r)]];
    }

    // Orthogonal factorization, not the normal equations; the closed form
    // is the contract, not the algorithm.
    Eigen::ColPivHouseholderQR<Matrix> qr(Xc);
    Vector beta;
    if (qr.rank() < p) {
      const auto diag = qr.matrixR().diagonal().cwiseAbs();
      const Scalar cond =
          diag.minCoeff() > 0 ? diag.maxCoeff() / diag.minCoeff() : std::numeric_limits<Scalar>::infinity();
      std::ostringstream w;
      w << "ls_fit: horizon k" << m.kseq[static_cast<std::size_t>(i)]
        << ": rank-deficient design (rank " << qr.rank() << " of " << p
        << ", condition ~" << format_shortest(cond) << "); minimum-norm solution";
      warnings[static_cast<std::size_t>(i)] = w.str();
      beta = Xc.completeOrthogonalDecomposition().solve(yc);
    } else {
      beta = qr.solve(yc);
    }
    fit.coefficients[static_cast<std::size_t>(i)] = beta;

    // predictions are in-sample: every row with a complete regressor set
    for (Index t = 0; t < n; ++t)
      if (row_complete(X, t)) fit.yhat.values(t, i) = X.row(t).dot(beta);

    if (opts.keep_traces) {
      Matrix trace(n, p);
      trace.rowwise() = beta.transpose();
      fit.coef_trace[static_cast<std::size_t>(i)] = std::move(trace);
    }
  });

  for (auto& w : warnings)
    if (!w.empty()) fit.warnings.push_back(std::move(w));

  finish_scores(fit, y, effective_scoreperiod(m, n, opts), p);
  return fit;
}

ForecastMatrix ls_predict(const std::vector<Vector>& coefficients,
                          const std::vector<int>& horizons, const DesignSet& design) {
  if (coefficients.size() != horizons.size() || design.horizons != horizons)
    throw ConfigError("ls_predict: coefficient/horizon mismatch");
  ForecastMatrix out;
  out.horizons = horizons;
  out.values = Matrix::Constant(design.n, static_cast<Index>(horizons.size()), kMissing);
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    const Matrix& X = design.X[i];
    const Vector& beta = coefficients[i];
    if (beta.size() != design.p) throw ConfigError("ls_predict: coefficient length mismatch");
    for (Index t = 0; t < design.n; ++t)
      if (row_complete(X, t)) out.values(t, static_cast<Index>(i)) = X.row(t).dot(beta);
  }
  return out;
}

void rls_update(Matrix& P, Vector& beta, const Vector& x, Scalar y, Scalar lambda, int horizon,
                std::int64_t step) {
  if (is_missing(y)) return;
  for (Index j = 0; j < x.size(); ++j)
    if (is_missing(x[j])) return;

  const Vector Px = P * x;
  const Scalar denom = lambda + x.dot(Px);
  const Vector K = Px / denom;
  beta += K * (y - x.dot(beta));
  P = (P - K * (x.transpose() * P)) / lambda;
  P = ((P + P.transpose()) * 0.5).eval();

  if (!beta.allFinite() || !P.allFinite() || !std::isfinite(denom) || denom <= 0.0)
    throw NumericError("rls_update: non-finite update at horizon k" + std::to_string(horizon) +
                       ", step " + std::to_string(step));
}

namespace {

struct HorizonStepper {
  int k;
  Scalar lambda;
  Matrix* P;
  Vector* beta;
  std::deque<Vector>* pending;

  // One time step: consume the newly available (x_{t|t-k}, y_t) pair and
  // emit the forecast for t+k from the coefficients at time t. A k=0 column
  // forecasts before its update so it stays out-of-sample.
  Scalar step(const Vector& x_row, Scalar y_t, std::int64_t global_step) {
    Scalar yhat = kMissing;
    if (k == 0) {
      if (row_ok(x_row)) yhat = x_row.dot(*beta);
      rls_update(*P, *beta, x_row, y_t, lambda, k, global_step);
      return yhat;
    }
    if (static_cast<int>(pending->size()) == k) {
      const Vector past = std::move(pending->front());
      pending->pop_front();
      rls_update(*P, *beta, past, y_t, lambda, k, global_step);
    }
    if (row_ok(x_row)) yhat = x_row.dot(*beta);
    pending->push_back(x_row);
    return yhat;
  }

  static bool row_ok(const Vector& x) {
    for (Index j = 0; j < x.size(); ++j)
      if (is_missing(x[j])) return false;
    return true;
  }
};

void set_continuity(RlsState& state, const DataSet& data) {
  if (data.rows() == 0) return;
  state.last_time = data.t.back();
  if (data.rows() >= 2) state.time_step = data.t[1] - data.t[0];
  state.iso_time = data.iso_time;
}

void check_continuity(const RlsState& state, const DataSet& data) {
  if (data.rows() == 0) return;
  if (data.rows() >= 2) {
    const std::int64_t step = data.t[1] - data.t[0];
    if (state.time_step > 0 && step != state.time_step)
      throw DataError("new data sampling period differs from the fitted state");
  }
  if (state.time_step > 0 && state.step > 0 &&
      data.t.front() != state.last_time + state.time_step)
    throw DataError("new data does not continue the state's time index (expected " +
                    std::to_string(state.last_time + state.time_step) + ", got " +
                    std::to_string(data.t.front()) + ")");
}

}  // namespace

FitResult rls_fit(const ParamMap& params, const ModelSpec& model, const DataSet& data,
                  const FitOptions& opts, RlsState* final_state) {
  const ModelSpec m = with_params(model, params);
  m.validate();
  const Scalar lambda = m.effective_lambda();
  if (!(lambda > 0.0 && lambda <= 1.0))
    throw ConfigError("rls_fit: lambda must be in (0, 1], got " + format_shortest(lambda));
  const Vector& y = output_series(m, data);

  const auto transformed = transform::eval_transform(m, data, transform::TransformState{});
  const DesignSet design = build_design(transformed.inputs, y, m.kseq);
  const Index n = design.n, p = design.p;
  const Index nk = static_cast<Index>(m.kseq.size());

  FitResult fit;
  fit.horizons = m.kseq;
  fit.colnames = design.colnames;
  fit.yhat.horizons = m.kseq;
  fit.yhat.values = Matrix::Constant(n, nk, kMissing);
  fit.coefficients.assign(static_cast<std::size_t>(nk), Vector());
  if (opts.keep_traces) fit.coef_trace.assign(static_cast<std::size_t>(nk), Matrix());

  RlsState state;
  state.lambda = lambda;
  state.horizons = m.kseq;
  state.colnames = design.colnames;
  state.per_horizon.resize(static_cast<std::size_t>(nk));
  state.output = m.output;

  parallel_for(nk, opts.threads, [&](Index i) {
    auto& h = state.per_horizon[static_cast<std::size_t>(i)];
    h.P = Matrix::Identity(p, p) * kInitialP;
    h.beta = Vector::Zero(p);
    const int k = m.kseq[static_cast<std::size_t>(i)];
    HorizonStepper stepper{k, lambda, &h.P, &h.beta, &h.pending};

    Matrix* trace = opts.keep_traces ? &fit.coef_trace[static_cast<std::size_t>(i)] : nullptr;
    if (trace) trace->resize(n, p);

    const Matrix& X = design.X[static_cast<std::size_t>(i)];
    for (Index t = 0; t < n; ++t) {
      const Scalar y_t = y[t];
      fit.yhat.values(t, i) = stepper.step(X.row(t), y_t, t + 1);
      if (trace) trace->row(t) = h.beta.transpose();
    }
    fit.coefficients[static_cast<std::size_t>(i)] = h.beta;
  });

  finish_scores(fit, y, effective_scoreperiod(m, n, opts), p);

  if (final_state) {
    state.step = n;
    state.transform = transformed.state;
    state.model = m;
    set_continuity(state, data);
    *final_state = std::move(state);
  }
  return fit;
}

ForecastMatrix rls_predict(const RlsState& state, const ModelSpec& model,
                           const DataSet& newdata) {
  ModelSpec m = model;
  m.kseq = state.horizons;
  const auto transformed = transform::eval_transform(m, newdata, state.transform);

  Vector y;  // design assembly only; targets are unknown for new rows
  const DesignSet design = build_design(transformed.inputs, y, state.horizons);
  if (design.colnames != state.colnames)
    throw ConfigError("rls_predict: model regressors do not match the state (" +
                      std::to_string(design.p) + " vs " + std::to_string(state.p()) + " columns)");

  ForecastMatrix out;
  out.horizons = state.horizons;
  out.values = Matrix::Constant(design.n, static_cast<Index>(state.horizons.size()), kMissing);
  for (std::size_t i = 0; i < state.horizons.size(); ++i) {
    const Matrix& X = design.X[i];
    const Vector& beta = state.per_horizon[i].beta;
    for (Index t = 0; t < design.n; ++t)
      if (row_complete(X, t)) out.values(t, static_cast<Index>(i)) = X.row(t).dot(beta);
  }
  return out;
}

ForecastMatrix rls_ingest(RlsState& state, const ModelSpec& model, const DataSet& newdata) {
  ModelSpec m = model;
  m.kseq = state.horizons;

  ForecastMatrix out;
  out.horizons = state.horizons;
  out.values = Matrix::Constant(newdata.rows(), static_cast<Index>(state.horizons.size()),
                                kMissing);
  if (newdata.rows() == 0) return out;

  check_continuity(state, newdata);
  const Vector& y = output_series(m, newdata);

  const auto transformed = transform::eval_transform(m, newdata, state.transform);
  const DesignSet design = build_design(transformed.inputs, y, state.horizons);
  if (design.colnames != state.colnames)
    throw ConfigError("rls_ingest: model regressors do not match the state");

  const Index nk = static_cast<Index>(state.horizons.size());
  for (Index i = 0; i < nk; ++i) {
    auto& h = state.per_horizon[static_cast<std::size_t>(i)];
    HorizonStepper stepper{state.horizons[static_cast<std::size_t>(i)], state.lambda, &h.P,
                           &h.beta, &h.pending};
    const Matrix& X = design.X[static_cast<std::size_t>(i)];
    for (Index t = 0; t < design.n; ++t)
      out.values(t, i) = stepper.step(X.row(t), y[t], state.step + t + 1);
  }

  state.step += design.n;
  state.transform = transformed.state;
  set_continuity(state, newdata);
  return out;
}

ForecastMatrix rls_predict(const RlsState& state, const DataSet& newdata) {
  return rls_predict(state, state.model, newdata);
}

ForecastMatrix rls_ingest(RlsState& state, const DataSet& newdata) {
  return rls_ingest(state, state.model, newdata);
}

Scalar fit_score(Scheme scheme, const ParamMap& params, const ModelSpec& model,
                 const DataSet& data, const FitOptions& opts) {
  FitOptions o = opts;
  o.keep_traces = false;
  const FitResult fit = scheme == Scheme::Ls ? ls_fit(params, model, data, o)
                                             : rls_fit(params, model, data, o);
  return fit.score_sum;
}

}  // namespace hcast::regression
