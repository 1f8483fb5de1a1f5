#pragma once

#include "hcast/regression.hpp"
#include "hcast/tuning.hpp"

#include <string>
#include <vector>

namespace hcast::evaluate {

struct Correlogram {
  Vector values;        // index = lag for ACF; see `lags` for CCF
  std::vector<int> lags;
  Scalar band = 0;      // +-1.96/sqrt(m) white-noise band
  Index m = 0;          // non-missing count behind the band
};

/// Autocorrelation r_0..r_lag_max with missing data: products over
/// pairwise-complete pairs, mean and normalization from all non-missing
/// values, r_0 fixed at one. Needs at least three non-missing values and
/// non-zero variance.
Correlogram acf(const Vector& series, int lag_max);

/// Cross-correlation at lags -lag_max..lag_max, pairwise complete; the
/// value at lag l pairs x_t with y_{t-l}, so a positive lag means y leads x.
Correlogram ccf(const Vector& x, const Vector& y, int lag_max);

/// Running sum of squared non-missing residuals for one horizon.
Vector cumulative_squared_error(const ResidualMatrix& resid, int horizon);

struct ScoreTable {
  std::vector<int> horizons;           // rows
  std::vector<std::string> models;     // columns
  Matrix rmse;                         // |horizons| x |models|
  Index rows_used = 0;
};

/// Per-model per-horizon RMSE on one shared complete-case mask across all
/// models and horizons. All fits must share the horizon list.
ScoreTable score_table(const std::vector<std::pair<std::string, const regression::FitResult*>>& fits,
                       const Mask& mask);

// ---- plot-data emission ------------------------------------------------

/// Tidy plot data: one observation per row (time-or-lag, series, value),
/// written as CSV; `svg_path` non-empty additionally renders a static SVG
/// line chart. Output is deterministic.
struct PlotSeries {
  std::string name;
  std::vector<Scalar> x;
  std::vector<Scalar> y;  // NaN = gap
};

void emit_plot_data(const std::vector<PlotSeries>& series, const std::string& x_label,
                    const std::string& csv_path, const std::string& svg_path = "");

/// Observed output and selected forecast horizons over time.
void emit_forecast_plot(const DataSet& data, const std::string& output,
                        const ForecastMatrix& yhat, const std::vector<int>& horizons,
                        const std::string& csv_path, const std::string& svg_path = "");

/// Residual series per selected horizon.
void emit_residual_plot(const ResidualMatrix& resid, const std::vector<int>& horizons,
                        const std::string& csv_path, const std::string& svg_path = "");

/// ACF values with the white-noise band.
void emit_acf_plot(const Correlogram& cg, const std::string& csv_path,
                   const std::string& svg_path = "");

/// RMSE as a function of the horizon, one series per model.
void emit_score_plot(const ScoreTable& table, const std::string& csv_path,
                     const std::string& svg_path = "");

/// Coefficient traces over time for one horizon.
void emit_coef_trace_plot(const regression::FitResult& fit, int horizon, const std::string& csv_path,
                          const std::string& svg_path = "");

}  // namespace hcast::evaluate
