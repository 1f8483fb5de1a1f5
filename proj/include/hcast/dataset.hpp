#pragma once

#include "hcast/forecast_matrix.hpp"
#include "hcast/types.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace hcast {

/// Shared equidistant time index plus named observation series and named
/// forecast matrices. Immutable after load; safe to share across workers.
///
/// Timestamps follow the end-of-interval convention. In CSV they are
/// ISO-8601 UTC (or bare integers); internally only the step index matters,
/// the sampling period is normalized to one step.
struct DataSet {
  std::vector<std::int64_t> t;  // epoch seconds, or bare indices
  bool iso_time = true;         // render t as ISO-8601 on save
  std::map<std::string, Vector> observations;
  std::map<std::string, ForecastMatrix> forecasts;

  Index rows() const { return static_cast<Index>(t.size()); }
  bool has_observation(const std::string& name) const;
  bool has_forecast(const std::string& name) const;
  const Vector& observation(const std::string& name) const;
  const ForecastMatrix& forecast(const std::string& name) const;

  /// Shape invariants only; equidistance is checked at load time.
  void validate() const;
};

/// Parses "YYYY-MM-DD HH:MM:SS" / "YYYY-MM-DDTHH:MM:SS[Z]" as UTC epoch
/// seconds, or a bare integer. Throws DataError on anything else.
std::int64_t parse_time(const std::string& text);
std::string format_time_iso(std::int64_t epoch_seconds);

/// Loads an RFC-4180 CSV with a mandatory `t` column. Columns matching
/// `<name><horizon_marker><h>` (default marker ".k") are grouped into one
/// ForecastMatrix per <name>; all other columns become observations.
/// Empty fields are missing. Rejects non-equidistant time (reporting the
/// first offending gap), duplicate columns and non-numeric cells.
DataSet load_dataset(const std::string& path, const std::string& horizon_marker = ".k");

/// Inverse of load_dataset; finite values round-trip to 17 significant digits.
void save_dataset(const DataSet& data, const std::string& path,
                  const std::string& horizon_marker = ".k");

/// Mask of timestamps in the period (start, end] (end-of-interval convention).
Mask in_range(std::int64_t start, std::int64_t end, const std::vector<std::int64_t>& t);
Mask in_range(std::int64_t start, const std::vector<std::int64_t>& t);

/// Row subset. The selection keeps relative order; an empty selection is an
/// error. Row subsets of equidistant data may be irregular in time and are
/// meant for scoring/plotting, not as fitting input.
DataSet subset(const DataSet& data, const Mask& keep);
/// Horizon subset applied to every forecast matrix.
DataSet subset(const DataSet& data, const std::vector<int>& horizons);

/// mask[t] true iff every listed matrix is non-missing at row t for all
/// requested horizons. Throws DataError naming matrix and horizon when a
/// horizon is absent.
Mask complete_cases(const std::vector<std::pair<std::string, const ForecastMatrix*>>& matrices,
                    const std::vector<int>& horizons);
Mask complete_cases(const ForecastMatrix& m);

/// Residuals aligned with observation time: column h<k> row s is
/// y_s - yhat[s-k, k]. Missing propagates.
ResidualMatrix residuals(const ForecastMatrix& yhat, const Vector& y);

}  // namespace hcast
