#include "hcast/forecast_matrix.hpp"

#include <algorithm>

namespace hcast {

ForecastMatrix::ForecastMatrix(std::vector<int> hs, Matrix vals)
    : horizons(std::move(hs)), values(std::move(vals)) {
  validate();
}

bool ForecastMatrix::has_horizon(int k) const {
  return std::binary_search(horizons.begin(), horizons.end(), k);
}

Index ForecastMatrix::col_index(int k) const {
  auto it = std::lower_bound(horizons.begin(), horizons.end(), k);
  if (it == horizons.end() || *it != k)
    throw DataError("horizon k" + std::to_string(k) + " not present");
  return static_cast<Index>(it - horizons.begin());
}

void ForecastMatrix::validate() const {
  if (static_cast<Index>(horizons.size()) != values.cols())
    throw DataError("forecast matrix: horizon list and column count differ");
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    if (horizons[i] < 0) throw DataError("forecast matrix: negative horizon");
    if (i > 0 && horizons[i] <= horizons[i - 1])
      throw DataError("forecast matrix: horizons must be strictly increasing");
  }
}

ForecastMatrix ForecastMatrix::ones(Index n, const std::vector<int>& horizons) {
  return constant(n, horizons, 1.0);
}

ForecastMatrix ForecastMatrix::constant(Index n, const std::vector<int>& horizons, Scalar v) {
  ForecastMatrix m;
  m.horizons = horizons;
  m.values = Matrix::Constant(n, static_cast<Index>(horizons.size()), v);
  m.validate();
  return m;
}

ForecastMatrix ForecastMatrix::select_horizons(const std::vector<int>& ks) const {
  ForecastMatrix out;
  out.horizons = ks;
  out.values.resize(rows(), static_cast<Index>(ks.size()));
  for (std::size_t j = 0; j < ks.size(); ++j) out.values.col(j) = values.col(col_index(ks[j]));
  out.validate();
  return out;
}

Index ResidualMatrix::col_index(int k) const {
  auto it = std::find(horizons.begin(), horizons.end(), k);
  if (it == horizons.end())
    throw DataError("residual matrix: horizon h" + std::to_string(k) + " not present");
  return static_cast<Index>(it - horizons.begin());
}

Mask complete_rows(const Matrix& values) {
  Mask mask = all_true(values.rows());
  for (Index t = 0; t < values.rows(); ++t)
    for (Index j = 0; j < values.cols(); ++j)
      if (is_missing(values(t, j))) {
        mask[t] = false;
        break;
      }
  return mask;
}

}  // namespace hcast
