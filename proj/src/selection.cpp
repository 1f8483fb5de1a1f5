#include "hcast/selection.hpp"

#include "hcast/threading.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace hcast::selection {

Direction parse_direction(const std::string& text) {
  if (text == "backward") return Direction::Backward;
  if (text == "forward") return Direction::Forward;
  if (text == "both") return Direction::Both;
  throw ConfigError("unknown direction '" + text + "' (expected backward, forward or both)");
}

const char* to_string(Direction d) {
  switch (d) {
    case Direction::Backward: return "backward";
    case Direction::Forward: return "forward";
    case Direction::Both: return "both";
  }
  return "?";
}

std::string SelectionResult::log_text() const {
  std::ostringstream os;
  for (const auto& e : log) {
    os << "step " << e.step << ": " << e.candidate << " score=" << format_shortest(e.score)
       << " columns=" << e.columns;
    if (!e.decision.empty()) os << " [" << e.decision << "]";
    os << "\n";
  }
  return os.str();
}

namespace {

// Bounds relevant for a model: bare regression names always, input__param
// names only when the input is present.
std::vector<ParameterBounds> bounds_for(const std::vector<ParameterBounds>& all,
                                        const ModelSpec& m) {
  std::vector<ParameterBounds> out;
  for (const auto& b : all) {
    auto parts = split_param_name(b.name);
    if (!parts || m.has_input(parts->first)) out.push_back(b);
  }
  return out;
}

ModelSpec strip_foreign_params(ModelSpec m) {
  ParamMap kept;
  for (const auto& b : m.bounds) {
    auto it = m.prm.find(b.name);
    if (it != m.prm.end()) kept.emplace(*it);
  }
  m.prm = std::move(kept);
  m.seed_parameters();
  return m;
}

struct Candidate {
  std::string description;
  ModelSpec model;
};

std::vector<Candidate> make_candidates(const ModelSpec& incumbent, const ModelSpec& full,
                                       Direction dir) {
  std::vector<Candidate> out;
  const bool backward = dir == Direction::Backward || dir == Direction::Both;
  const bool forward = dir == Direction::Forward || dir == Direction::Both;

  if (backward) {
    if (incumbent.inputs.size() >= 2) {
      for (const auto& [name, src] : incumbent.inputs) {
        ModelSpec m = incumbent;
        std::erase_if(m.inputs, [&](const auto& p) { return p.first == name; });
        m.bounds = bounds_for(full.bounds, m);
        out.push_back({"remove " + name, strip_foreign_params(std::move(m))});
      }
    }
    for (const auto& b : incumbent.bounds) {
      if (!b.integer) continue;
      const Scalar v = incumbent.prm.at(b.name);
      if (v - 1 >= b.min) {
        ModelSpec m = incumbent;
        m.prm[b.name] = v - 1;
        out.push_back({"decrement " + b.name + " to " + format_shortest(v - 1), std::move(m)});
      }
    }
  }

  if (forward) {
    for (const auto& [name, src] : full.inputs) {
      if (incumbent.has_input(name)) continue;
      ModelSpec m = incumbent;
      m.inputs.emplace_back(name, src);
      m.bounds = bounds_for(full.bounds, m);
      ModelSpec stripped = strip_foreign_params(std::move(m));
      // a freshly added input starts at the full model's inits
      out.push_back({"add " + name, std::move(stripped)});
    }
    for (const auto& b : incumbent.bounds) {
      if (!b.integer) continue;
      const Scalar v = incumbent.prm.at(b.name);
      if (v + 1 <= b.max) {
        ModelSpec m = incumbent;
        m.prm[b.name] = v + 1;
        out.push_back({"increment " + b.name + " to " + format_shortest(v + 1), std::move(m)});
      }
    }
  }
  return out;
}

struct Scored {
  Candidate candidate;
  regression::FitResult fit;
  Scalar shared_score = 0;
};

}  // namespace

SelectionResult step_selection(const ModelSpec& start_model, const ModelSpec& full_model,
                               const DataSet& data, Direction direction,
                               const SelectionSettings& settings) {
  if (start_model.inputs.empty()) throw ConfigError("step_selection: start model has no inputs");
  if (direction != Direction::Backward)
    for (const auto& [name, src] : start_model.inputs)
      if (!full_model.has_input(name))
        throw ConfigError("step_selection: start input '" + name + "' is not in the full model");
  if (settings.kseq.empty()) throw ConfigError("step_selection: empty kseq");

  // selection over in-sample LS scores over-fits; only RLS is supported
  ModelSpec incumbent = start_model;
  incumbent.scheme = Scheme::Rls;
  incumbent.kseq = settings.kseq;
  incumbent.bounds = bounds_for(full_model.bounds, incumbent);
  incumbent = strip_foreign_params(std::move(incumbent));

  SelectionResult result;
  const Mask scoreperiod = settings.optimize.scoreperiod
                               ? *settings.optimize.scoreperiod
                               : start_model.scoreperiod(data.rows());

  auto optimize_and_fit = [&](ModelSpec& m) {
    m.kseq = settings.kseq;
    m.scheme = Scheme::Rls;
    if (!m.bounds.empty()) {
      tuning::OptimizeSettings os = settings.optimize;
      os.scoreperiod = scoreperiod;
      tuning::optimize(m, data, Scheme::Rls, settings.kseq, os);
    } else {
      m.seed_parameters();
    }
    regression::FitOptions fo;
    fo.keep_traces = false;
    fo.scoreperiod = scoreperiod;
    return regression::rls_fit(m.prm, m, data, fo);
  };

  regression::FitResult incumbent_fit = optimize_and_fit(incumbent);
  Scalar incumbent_score = incumbent_fit.score_sum;
  int step = 0;

  while (true) {
    ++step;
    std::vector<Candidate> candidates = make_candidates(incumbent, full_model, direction);
    if (candidates.empty()) {
      result.log.push_back({step, "no candidates", incumbent_score,
                            static_cast<Index>(incumbent_fit.colnames.size()), false, "stop"});
      break;
    }

    std::vector<Scored> scored(candidates.size());
    parallel_for(static_cast<Index>(candidates.size()), settings.threads, [&](Index i) {
      Candidate c = candidates[static_cast<std::size_t>(i)];
      // warm start: shared continuous parameters begin at the incumbent's optimum
      for (auto& [name, value] : c.model.prm) {
        auto it = incumbent.prm.find(name);
        if (it != incumbent.prm.end()) value = it->second;
      }
      for (const auto& b : c.model.bounds) {
        auto& v = c.model.prm.at(b.name);
        if (!(v > b.min && v < b.max) && !b.integer) v = b.init;
      }
      Scored s;
      s.fit = optimize_and_fit(c.model);
      s.candidate = std::move(c);
      scored[static_cast<std::size_t>(i)] = std::move(s);
    });

    // one shared complete-case mask across the incumbent and every candidate
    Mask shared = scoreperiod && complete_rows(incumbent_fit.resid.values);
    for (const auto& s : scored) shared = shared && complete_rows(s.fit.resid.values);

    const Scalar incumbent_shared = tuning::score(incumbent_fit.resid, shared).total;
    for (auto& s : scored) s.shared_score = tuning::score(s.fit.resid, shared).total;

    std::stable_sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
      if (a.shared_score != b.shared_score) return a.shared_score < b.shared_score;
      if (a.fit.colnames.size() != b.fit.colnames.size())
        return a.fit.colnames.size() < b.fit.colnames.size();
      return a.candidate.description < b.candidate.description;
    });

    for (const auto& s : scored)
      result.log.push_back({step, s.candidate.description, s.shared_score,
                            static_cast<Index>(s.fit.colnames.size()), false, ""});

    Scored& best = scored.front();
    const Scalar margin = (incumbent_shared - best.shared_score) /
                          std::max(std::abs(incumbent_shared), Scalar(1e-300));
    if (margin >= settings.improvement) {
      result.log.push_back({step, best.candidate.description, best.shared_score,
                            static_cast<Index>(best.fit.colnames.size()), true, "selected"});
      incumbent = std::move(best.candidate.model);
      incumbent_fit = std::move(best.fit);
      incumbent_score = incumbent_fit.score_sum;
    } else {
      result.log.push_back({step, "keep incumbent", incumbent_shared,
                            static_cast<Index>(incumbent_fit.colnames.size()), true,
                            "no improvement, stop"});
      break;
    }
  }

  result.selected = incumbent;
  result.score = incumbent_score;
  return result;
}

}  // namespace hcast::selection
