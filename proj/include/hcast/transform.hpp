#pragma once

#include "hcast/dataset.hpp"
#include "hcast/expr.hpp"
#include "hcast/forecast_matrix.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace hcast {
struct ModelSpec;
}

namespace hcast::transform {

/// Per-column filter memories of one lp() node (one vector per matrix in
/// the incoming list; NaN marks a column that has not seen a finite value).
struct LpState {
  std::vector<Vector> memory;
};

/// History buffer of one AR() node: rows consumed so far plus the tail of
/// the output series needed to serve the largest lag.
struct ArState {
  std::int64_t consumed = 0;
  int max_lag = 0;
  std::vector<Scalar> tail;  // most recent last, length <= max_lag
};

/// Frozen knot vector of one bspline() node (boundary knots repeated
/// degree+1 times). Knots are computed once from the first batch and kept
/// for all later evaluations so online predictions use the exact basis the
/// coefficients were trained on.
struct SplineState {
  bool frozen = false;
  Vector knots;
};

using KernelState = std::variant<LpState, ArState, SplineState>;

/// All stateful-kernel memories of a model instance, keyed by
/// "<input>#<node index>" in evaluation order. Replay-deterministic and
/// serializable; evaluation never mutates a state in place.
struct TransformState {
  std::map<std::string, KernelState> kernels;
  std::int64_t rows_seen = 0;
};

// ---- transformation kernels ------------------------------------------------

/// Forecast matrix of ones (intercept).
ForecastMatrix one(Index n, const std::vector<int>& horizons);

/// First-order low-pass filter with unity DC gain, applied independently
/// per horizon column:  x_t = a1 * x_{t-1} + (1 - a1) * u_t.
/// The per-column state starts at the first non-missing input value, so a
/// constant input maps to a constant output from row one. Missing input
/// yields missing output and leaves the memory unchanged.
ForecastMatrix lp(const ForecastMatrix& u, Scalar a1, Vector& memory);

/// B-spline basis evaluated entrywise (Cox-de Boor recursion). Boundary
/// knots are the min/max of the pooled finite values over all columns of
/// the first batch; df - degree - (intercept ? 1 : 0) interior knots sit at
/// equidistant quantiles of the pooled values. Out-of-range inputs clamp to
/// the boundary. Returns df matrices; the first basis function is dropped
/// when intercept is false.
std::vector<ForecastMatrix> bspline(const ForecastMatrix& u, int df, int degree,
                                    bool intercept, SplineState& state);

/// Fourier series pairs: sin(2*pi*j*u), cos(2*pi*j*u) for j = 1..nharmonics,
/// ordered sin1, cos1, sin2, cos2, ... The caller pre-scales the input so
/// one period spans one unit.
std::vector<ForecastMatrix> fs(const ForecastMatrix& u, int nharmonics);

/// Lagged output observations as regressors: one matrix per lag l whose
/// every horizon column at row t holds y_{t-l} (known at the forecast
/// origin, identical across horizons).
std::vector<ForecastMatrix> ar(const Vector& y, const std::vector<int>& lags,
                               const std::vector<int>& horizons, ArState& state);

/// Horizon-aligned list product (the %**% operator): cartesian pairing of
/// the two lists, elementwise per-horizon products, a-major ordering.
std::vector<ForecastMatrix> multiply(const std::vector<ForecastMatrix>& a,
                                     const std::vector<ForecastMatrix>& b,
                                     const std::string& a_label = "lhs",
                                     const std::string& b_label = "rhs");

// ---- expression evaluation -------------------------------------------------

struct TransformResult {
  /// One entry per model input, in declaration order.
  std::vector<std::pair<std::string, std::vector<ForecastMatrix>>> inputs;
  TransformState state;
};

/// Evaluates every input expression of the model bottom-up against `data`,
/// with the model's current parameter values bound into named arguments.
/// Deterministic given (data, parameters, state); the updated state is
/// returned, the given one is left untouched.
TransformResult eval_transform(const ModelSpec& model, const DataSet& data,
                               const TransformState& state);

}  // namespace hcast::transform
