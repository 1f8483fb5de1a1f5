#pragma once

#include "hcast/types.hpp"

#include <string>
#include <vector>

namespace hcast {

/// Horizon-indexed forecast table. Row t, column for horizon k holds the
/// value for time t+k issued at time t ("the latest available forecast").
/// Columns are labelled "k<h>" in CSV files.
struct ForecastMatrix {
  std::vector<int> horizons;  // strictly increasing, non-negative
  Matrix values;              // n x horizons.size(), NaN = missing

  ForecastMatrix() = default;
  ForecastMatrix(std::vector<int> hs, Matrix vals);

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }

  bool has_horizon(int k) const;
  /// Column index for horizon k; throws DataError when absent.
  Index col_index(int k) const;

  /// Checks the shape and horizon-ordering invariants; throws DataError.
  void validate() const;

  /// All-ones matrix (the intercept generator).
  static ForecastMatrix ones(Index n, const std::vector<int>& horizons);
  static ForecastMatrix constant(Index n, const std::vector<int>& horizons, Scalar v);

  /// Copy restricted to a subset of horizons (each must be present).
  ForecastMatrix select_horizons(const std::vector<int>& ks) const;
};

/// Residual table aligned with observation time: column "h<k>" at row s
/// holds y_s - yhat_{s|s-k}. The first k rows of column h<k> are missing.
struct ResidualMatrix {
  std::vector<int> horizons;
  Matrix values;

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }
  Index col_index(int k) const;
};

/// Rows where every column is non-missing.
Mask complete_rows(const Matrix& values);

}  // namespace hcast
