#pragma once

#include "hcast/regression.hpp"

#include <functional>
#include <string>
#include <vector>

namespace hcast::tuning {

/// Root mean square error over the non-missing entries; NaN when none.
Scalar rmse(const Vector& residuals);

struct ScoreReport {
  std::vector<int> horizons;
  Vector values;          // per-horizon RMSE
  Scalar total = 0;       // unweighted sum over horizons
  Index rows_used = 0;    // masked AND complete rows entering every horizon
  Index mask_size = 0;    // true entries of the supplied mask
};

/// Per-horizon RMSE over the masked rows. The row set is the intersection
/// of the mask with the residual matrix's complete rows, so every horizon
/// is scored on the identical rows. Throws DataError when that set is empty.
ScoreReport score(const ResidualMatrix& resid, const Mask& mask);

/// Returned instead of a score when a parameter leaves its declared bounds;
/// finite so optimizers can keep moving.
inline constexpr Scalar kPenaltyScore = 1e300;

/// Binds theta over the model's parameters, fits with the given scheme on
/// the kseq horizons and returns the summed per-horizon RMSE on the
/// score-period mask. Out-of-bounds theta yields kPenaltyScore, never a
/// crash. Empty kseq is an error.
Scalar objective(const ParamMap& theta, const ModelSpec& model, const DataSet& data,
                 Scheme scheme, const std::vector<int>& kseq,
                 const std::optional<Mask>& scoreperiod = {});

struct OptimizeSettings {
  Scalar tolerance = 1e-4;  // simplex score spread
  int max_iterations = 200;
  int threads = 1;
  std::optional<Mask> scoreperiod;
};

struct TraceEntry {
  int evaluation = 0;
  ParamMap params;
  Scalar score = 0;
  bool improved = false;
};

struct OptimizeResult {
  ParamMap best;         // all offline parameters (integers pass through)
  Scalar best_score = 0;
  Scalar init_score = 0;
  int evaluations = 0;
  int iterations = 0;
  std::vector<TraceEntry> trace;
  std::vector<std::string> warnings;
};

/// Bounded Nelder-Mead over the continuous offline parameters, run on
/// coordinates mapped to the real line by a scaled logit over (min, max) so
/// the objective is never evaluated outside the declared bounds. Starts at
/// the init values; stops when the simplex score spread drops below the
/// tolerance or the iteration cap is hit. Integer-flagged parameters are
/// held fixed (the selection module steps them). The optimum is written
/// back into model.prm.
OptimizeResult optimize(ModelSpec& model, const DataSet& data, Scheme scheme,
                        const std::vector<int>& kseq, const OptimizeSettings& settings = {});

/// Maps x in (lo, hi) to the real line and back.
Scalar bound_to_real(Scalar x, Scalar lo, Scalar hi);
Scalar real_to_bound(Scalar z, Scalar lo, Scalar hi);

}  // namespace hcast::tuning
