#pragma once

#include "hcast/tuning.hpp"

#include <string>
#include <vector>

namespace hcast::selection {

enum class Direction { Backward, Forward, Both };

Direction parse_direction(const std::string& text);
const char* to_string(Direction d);

struct StepEntry {
  int step = 0;
  std::string candidate;
  Scalar score = 0;
  Index columns = 0;
  bool chosen = false;
  std::string decision;  // empty for plain candidate lines
};

struct SelectionResult {
  ModelSpec selected;
  Scalar score = 0;
  std::vector<StepEntry> log;

  /// Line-oriented step log: step index, candidate description, score,
  /// decision.
  std::string log_text() const;
};

struct SelectionSettings {
  std::vector<int> kseq;
  tuning::OptimizeSettings optimize;
  Scalar improvement = 1e-6;  // relative margin required to accept a step
  int threads = 1;
};

/// Stepwise model selection with the RLS scheme. Per step: backward removes
/// one input or counts one integer parameter down, forward adds one absent
/// full-model input or counts one up, both does all. Every candidate's
/// continuous offline parameters are re-optimized (warm-started from the
/// incumbent) before scoring; all candidates of a step are scored on one
/// shared complete-case mask. The best candidate replaces the incumbent
/// when it improves the score by the relative margin; ties break toward
/// fewer regressor columns, then lexicographic candidate description. Stops
/// when no candidate improves.
SelectionResult step_selection(const ModelSpec& start_model, const ModelSpec& full_model,
                               const DataSet& data, Direction direction,
                               const SelectionSettings& settings);

}  // namespace hcast::selection
