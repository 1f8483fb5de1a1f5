#pragma once

#include "hcast/dataset.hpp"
#include "hcast/model.hpp"
#include "hcast/transform.hpp"

#include <deque>
#include <optional>
#include <string>
#include <vector>

namespace hcast::regression {

/// Per-horizon design matrices aligned by forecast origin: row t of X_k
/// holds the regressor values x_{t+k|t} and pairs with observation y_{t+k}.
/// Rows keep their place in the time index; unusable entries are NaN.
struct DesignSet {
  std::vector<int> horizons;
  std::vector<Matrix> X;  // per horizon: n x p
  std::vector<Vector> y;  // per horizon: y[t] = y_{t+k} (NaN past the end)
  std::vector<std::string> colnames;

  Index n = 0;
  Index p = 0;
};

/// Assembles the design set: column j of X_k is horizon column k of the
/// j-th regressor matrix, in input order (lists expanded in order).
DesignSet build_design(
    const std::vector<std::pair<std::string, std::vector<ForecastMatrix>>>& inputs,
    const Vector& y, const std::vector<int>& horizons);

struct FitOptions {
  std::optional<Mask> scoreperiod;  // defaults to the model's burn-in mask
  bool keep_traces = true;          // store per-step coefficient traces
  int threads = 1;
};

struct FitResult {
  ForecastMatrix yhat;              // origin-aligned predictions
  std::vector<Vector> coefficients; // per horizon, final values
  std::vector<Matrix> coef_trace;   // per horizon: n x p (constant for LS)
  ResidualMatrix resid;
  Vector horizon_rmse;              // per horizon, on the score mask
  Vector sigma2;                    // per-horizon residual variance
  Scalar score_sum = 0;             // sum of horizon_rmse
  Mask score_mask;                  // scoreperiod AND complete residual rows
  std::vector<std::string> colnames;
  std::vector<std::string> warnings;
  std::vector<int> horizons;
};

/// Closed-form least squares per horizon via rank-revealing orthogonal
/// factorization (results match the normal equations on full-rank input).
/// Rows with any missing regressor or observation are dropped from the
/// solve; predictions are in-sample. Rank-deficient designs fall back to
/// the minimum-norm solution with a warning naming the horizon and a
/// condition estimate.
FitResult ls_fit(const ParamMap& params, const ModelSpec& model, const DataSet& data,
                 const FitOptions& opts = {});

/// Predictions x' * beta from already-fitted coefficients on new
/// transformed inputs.
ForecastMatrix ls_predict(const std::vector<Vector>& coefficients,
                          const std::vector<int>& horizons, const DesignSet& design);

/// Recursive least squares state for one model: per horizon the
/// covariance-proxy P, the coefficient vector, and the design rows whose
/// target observations have not arrived yet; plus all transformation
/// states. Versioned and serializable (see state_io.hpp).
struct RlsState {
  static constexpr int kSchemaVersion = 1;

  Scalar lambda = 0.9;
  std::int64_t step = 0;  // rows consumed
  std::vector<int> horizons;
  std::vector<std::string> colnames;

  struct Horizon {
    Matrix P;
    Vector beta;
    std::deque<Vector> pending;  // origin rows awaiting their target, oldest first
  };
  std::vector<Horizon> per_horizon;

  transform::TransformState transform;

  /// The fitted model (with its bound parameter values), so a state file is
  /// self-contained for predict/update.
  ModelSpec model;

  // Continuity guard for online updates.
  std::int64_t last_time = 0;
  std::int64_t time_step = 0;
  bool iso_time = true;
  std::string output;

  Index p() const { return per_horizon.empty() ? 0 : per_horizon.front().beta.size(); }
};

/// One Kalman-gain RLS step (matrix inversion avoided):
///   K = P x / (lambda + x' P x)
///   beta += K (y - x' beta)
///   P = (P - K x' P) / lambda, re-symmetrized as (P + P')/2.
/// Skips (state unchanged) when x or y has missing entries; throws
/// NumericError on non-finite intermediates.
void rls_update(Matrix& P, Vector& beta, const Vector& x, Scalar y, Scalar lambda,
                int horizon, std::int64_t step);

/// Full RLS pass over the data: per horizon k and time t, the pair
/// (x_{t|t-k}, y_t) is consumed as it becomes available and the forecast
/// yhat_{t+k|t} is emitted from the coefficients at time t; predictions are
/// out-of-sample. For a k=0 column the forecast is emitted before the
/// update so it stays out-of-sample too. Initialization: beta = 0,
/// P = 10000 * I.
FitResult rls_fit(const ParamMap& params, const ModelSpec& model, const DataSet& data,
                  const FitOptions& opts = {}, RlsState* final_state = nullptr);

/// Forecasts for new rows from the current coefficients; the state is not
/// modified (transformations run on a copy).
ForecastMatrix rls_predict(const RlsState& state, const ModelSpec& model,
                           const DataSet& newdata);
ForecastMatrix rls_predict(const RlsState& state, const DataSet& newdata);

/// Consumes new rows: advances transformation state, feeds newly completed
/// (x, y) pairs to the per-horizon updates, and returns the forecasts made
/// from the new origins. Verifies time continuity with the consumed rows.
ForecastMatrix rls_ingest(RlsState& state, const ModelSpec& model, const DataSet& newdata);
ForecastMatrix rls_ingest(RlsState& state, const DataSet& newdata);

/// Convenience: the summed per-horizon RMSE that a fit would score, for
/// either scheme.
Scalar fit_score(Scheme scheme, const ParamMap& params, const ModelSpec& model,
                 const DataSet& data, const FitOptions& opts = {});

}  // namespace hcast::regression
