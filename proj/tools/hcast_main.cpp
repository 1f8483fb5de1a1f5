// hcast command line: ingest CSV data, define models in config files,
// fit/optimize/select, generate and update online forecasts, evaluate.
//
// Exit codes: 0 ok, 2 config error, 3 data error, 4 numeric failure,
// 5 state schema mismatch.

#include "hcast/evaluate.hpp"
#include "hcast/selection.hpp"
#include "hcast/state_io.hpp"
#include "hcast/tuning.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace hcast;
using ordered_json = nlohmann::ordered_json;

namespace {

struct Common {
  std::string out_dir;
  int threads = 1;
  bool fixed_clock = false;
};

std::string now_iso(bool fixed_clock) {
  if (fixed_clock) return "1970-01-01T00:00:00Z";
  const auto now = std::chrono::system_clock::now();
  return format_time_iso(std::chrono::duration_cast<std::chrono::seconds>(
                             now.time_since_epoch())
                             .count());
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir + ": " + ec.message());
}

std::string join(const std::string& dir, const std::string& file) {
  return (fs::path(dir) / file).string();
}

void apply_env_defaults(Common& common) {
  if (common.out_dir.empty())
    if (const char* v = std::getenv("HCAST_OUT")) common.out_dir = v;
  if (const char* v = std::getenv("HCAST_THREADS")) {
    if (common.threads == 1) common.threads = std::max(1, std::atoi(v));
  }
}

std::string time_text(const DataSet& data, Index t) {
  return data.iso_time ? format_time_iso(data.t[static_cast<std::size_t>(t)])
                       : std::to_string(data.t[static_cast<std::size_t>(t)]);
}

void write_forecasts_csv(const DataSet& data, const ForecastMatrix& yhat,
                         const std::string& path, const std::string& name = "yhat") {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << "t";
  for (int k : yhat.horizons) out << "," << name << ".k" << k;
  out << "\n";
  for (Index t = 0; t < yhat.rows(); ++t) {
    out << time_text(data, t);
    for (Index j = 0; j < yhat.cols(); ++j) {
      out << ",";
      if (!is_missing(yhat.values(t, j))) out << format_g17(yhat.values(t, j));
    }
    out << "\n";
  }
}

void write_residuals_csv(const DataSet& data, const ResidualMatrix& resid,
                         const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << "t";
  for (int k : resid.horizons) out << ",h" << k;
  out << "\n";
  for (Index t = 0; t < resid.rows(); ++t) {
    out << time_text(data, t);
    for (Index j = 0; j < resid.cols(); ++j) {
      out << ",";
      if (!is_missing(resid.values(t, j))) out << format_g17(resid.values(t, j));
    }
    out << "\n";
  }
}

void write_coefficients_csv(const DataSet& data, const regression::FitResult& fit,
                            const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << "t,horizon,name,value\n";
  for (std::size_t i = 0; i < fit.horizons.size(); ++i) {
    if (fit.coef_trace.empty()) break;
    const Matrix& trace = fit.coef_trace[i];
    for (Index t = 0; t < trace.rows(); ++t)
      for (Index j = 0; j < trace.cols(); ++j) {
        out << time_text(data, t) << "," << fit.horizons[i] << ","
            << fit.colnames[static_cast<std::size_t>(j)] << ",";
        if (!is_missing(trace(t, j))) out << format_g17(trace(t, j));
        out << "\n";
      }
  }
}

void write_scores_csv(const regression::FitResult& fit, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << "horizon,rmse,sigma2\n";
  for (std::size_t i = 0; i < fit.horizons.size(); ++i) {
    out << fit.horizons[i] << "," << format_g17(fit.horizon_rmse[static_cast<Index>(i)]) << ",";
    if (!is_missing(fit.sigma2[static_cast<Index>(i)]))
      out << format_g17(fit.sigma2[static_cast<Index>(i)]);
    out << "\n";
  }
}

void write_summary(const std::string& path, const std::string& command, const ModelSpec& model,
                   const regression::FitResult& fit, Index n, const Common& common) {
  ordered_json j;
  j["command"] = command;
  j["scheme"] = to_string(model.scheme);
  j["output"] = model.output;
  ordered_json ks = ordered_json::array();
  for (int k : model.kseq) ks.push_back(k);
  j["kseq"] = ks;
  j["burnin"] = model.burnin;
  j["rows"] = n;
  j["rows_scored"] = count_true(fit.score_mask);
  j["score_sum"] = fit.score_sum;
  ordered_json w = ordered_json::array();
  for (const auto& s : fit.warnings) w.push_back(s);
  j["warnings"] = w;
  j["generated_at"] = now_iso(common.fixed_clock);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << j.dump(2) << "\n";
}

ModelSpec prepare_model(const std::string& config_path, const std::string& scheme,
                        const std::string& kseq, int burnin) {
  ModelSpec model = load_model(config_path);
  if (!scheme.empty()) model.scheme = parse_scheme(scheme);
  if (!kseq.empty()) model.kseq = parse_kseq(kseq);
  if (burnin >= 0) model.burnin = burnin;
  model.validate();
  return model;
}

// ---- subcommands ---------------------------------------------------------

int cmd_fit(const std::string& config, const std::string& data_path, const std::string& scheme,
            const std::string& kseq, int burnin, const Common& common) {
  ModelSpec model = prepare_model(config, scheme, kseq, burnin);
  const DataSet data = load_dataset(data_path);

  regression::FitOptions opts;
  opts.threads = common.threads;

  regression::FitResult fit;
  regression::RlsState state;
  if (model.scheme == Scheme::Ls) {
    fit = regression::ls_fit({}, model, data, opts);
  } else {
    fit = regression::rls_fit({}, model, data, opts, &state);
  }

  ensure_dir(common.out_dir);
  write_forecasts_csv(data, fit.yhat, join(common.out_dir, "forecasts.csv"));
  write_residuals_csv(data, fit.resid, join(common.out_dir, "residuals.csv"));
  write_coefficients_csv(data, fit, join(common.out_dir, "coefficients.csv"));
  write_scores_csv(fit, join(common.out_dir, "scores.csv"));
  write_summary(join(common.out_dir, "summary.json"), "fit", model, fit, data.rows(), common);
  if (model.scheme == Scheme::Rls)
    regression::save_state_atomic(state, join(common.out_dir, "state.json"));

  for (const auto& w : fit.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "score_sum " << format_shortest(fit.score_sum) << " over " << model.kseq.size()
            << " horizons (" << count_true(fit.score_mask) << " scored rows)\n";
  return 0;
}

int cmd_optimize(const std::string& config, const std::string& data_path,
                 const std::string& scheme, const std::string& kseq, int burnin,
                 const Common& common) {
  ModelSpec model = prepare_model(config, scheme, kseq, burnin);
  const DataSet data = load_dataset(data_path);

  tuning::OptimizeSettings settings;
  settings.threads = common.threads;
  const std::vector<int> opt_kseq = kseq.empty() ? model.kseq : parse_kseq(kseq);
  const auto result = tuning::optimize(model, data, model.scheme, opt_kseq, settings);

  ensure_dir(common.out_dir);
  std::ostringstream prov;
  prov << "optimized over kseq ";
  for (std::size_t i = 0; i < opt_kseq.size(); ++i) prov << (i ? "," : "") << opt_kseq[i];
  prov << "; score " << format_shortest(result.best_score) << " after " << result.evaluations
       << " evaluations; " << now_iso(common.fixed_clock);
  save_model(model, join(common.out_dir, "optimized.json"), prov.str());

  std::ofstream trace(join(common.out_dir, "optimize_trace.csv"), std::ios::binary);
  trace << "evaluation,score,improved";
  for (const auto& [name, v] : result.best) trace << "," << name;
  trace << "\n";
  for (const auto& e : result.trace) {
    trace << e.evaluation << "," << format_g17(e.score) << "," << (e.improved ? 1 : 0);
    for (const auto& [name, v] : result.best) trace << "," << format_g17(e.params.at(name));
    trace << "\n";
  }

  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "best score " << format_shortest(result.best_score) << " (init "
            << format_shortest(result.init_score) << ", " << result.evaluations
            << " evaluations)\n";
  for (const auto& [name, v] : result.best) std::cout << name << " " << format_shortest(v) << "\n";
  return 0;
}

int cmd_select(const std::string& config, const std::string& start_config,
               const std::string& data_path, const std::string& direction_text,
               const std::string& kseq, int burnin, const Common& common) {
  const auto direction = selection::parse_direction(direction_text);
  ModelSpec full = prepare_model(config, "rls", "", burnin);
  ModelSpec start;
  if (!start_config.empty()) {
    start = prepare_model(start_config, "rls", "", burnin);
  } else if (direction == selection::Direction::Forward) {
    throw ConfigError("forward selection needs --start (the model to grow from)");
  } else {
    start = full;
  }
  const DataSet data = load_dataset(data_path);

  selection::SelectionSettings settings;
  settings.kseq = kseq.empty() ? full.kseq : parse_kseq(kseq);
  settings.threads = common.threads;
  const auto result = selection::step_selection(start, full, data, direction, settings);

  ensure_dir(common.out_dir);
  save_model(result.selected, join(common.out_dir, "selected.json"),
             "selected by " + std::string(selection::to_string(direction)) + " stepping; score " +
                 format_shortest(result.score) + "; " + now_iso(common.fixed_clock));
  std::ofstream log(join(common.out_dir, "selection_log.txt"), std::ios::binary);
  log << result.log_text();

  std::cout << result.log_text();
  std::cout << "selected score " << format_shortest(result.score) << "\n";
  return 0;
}

int cmd_predict(const std::string& state_path, const std::string& newdata_path,
                const Common& common) {
  const regression::RlsState state = regression::load_state(state_path);
  const DataSet newdata = load_dataset(newdata_path);
  const ForecastMatrix yhat = regression::rls_predict(state, newdata);

  ensure_dir(common.out_dir);
  write_forecasts_csv(newdata, yhat, join(common.out_dir, "forecasts.csv"));
  std::cout << "predicted " << yhat.rows() << " rows x " << yhat.cols() << " horizons\n";
  return 0;
}

int cmd_update(const std::string& state_path, const std::string& newdata_path,
               const std::string& out_state, const Common& common) {
  regression::RlsState state = regression::load_state(state_path);
  const DataSet newdata = load_dataset(newdata_path);
  const ForecastMatrix yhat = regression::rls_ingest(state, newdata);

  ensure_dir(fs::path(out_state).parent_path().string().empty()
                 ? "."
                 : fs::path(out_state).parent_path().string());
  regression::save_state_atomic(state, out_state);
  if (!common.out_dir.empty()) {
    ensure_dir(common.out_dir);
    write_forecasts_csv(newdata, yhat, join(common.out_dir, "forecasts.csv"));
  }
  std::cout << "consumed " << newdata.rows() << " rows; state at step " << state.step << "\n";
  return 0;
}

ResidualMatrix read_residuals_csv(const std::string& path) {
  const DataSet raw = load_dataset(path);
  ResidualMatrix resid;
  std::vector<std::pair<int, const Vector*>> cols;
  for (const auto& [name, v] : raw.observations) {
    if (name.size() < 2 || name[0] != 'h') continue;
    bool digits = true;
    for (std::size_t i = 1; i < name.size(); ++i)
      if (!std::isdigit(static_cast<unsigned char>(name[i]))) digits = false;
    if (digits) cols.emplace_back(std::atoi(name.c_str() + 1), &v);
  }
  if (cols.empty()) throw DataError(path + ": no h<k> residual columns found");
  std::sort(cols.begin(), cols.end());
  resid.values.resize(raw.rows(), static_cast<Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) {
    resid.horizons.push_back(cols[i].first);
    resid.values.col(static_cast<Index>(i)) = *cols[i].second;
  }
  return resid;
}

int cmd_eval(const std::string& fit_dir, const std::string& plots, const std::string& data_path,
             int horizon, const Common& common) {
  ensure_dir(common.out_dir);

  const ResidualMatrix resid = read_residuals_csv(join(fit_dir, "residuals.csv"));

  Index burnin = 0;
  {
    std::ifstream in(join(fit_dir, "summary.json"));
    if (in) {
      try {
        ordered_json j = ordered_json::parse(in);
        if (j.contains("burnin")) burnin = j["burnin"].get<Index>();
      } catch (...) {
      }
    }
  }
  Mask mask = all_true(resid.rows());
  for (Index i = 0; i < std::min(burnin, resid.rows()); ++i) mask[i] = false;

  std::stringstream ss(plots);
  std::string kind;
  bool any = false;
  while (std::getline(ss, kind, ',')) {
    if (kind.empty()) continue;
    any = true;
    if (kind == "residuals") {
      evaluate::emit_residual_plot(resid, resid.horizons, join(common.out_dir, "plot_residuals.csv"),
                         join(common.out_dir, "plot_residuals.svg"));
    } else if (kind == "acf") {
      const int k = horizon > 0 ? horizon : resid.horizons.front();
      Vector h = resid.values.col(resid.col_index(k));
      for (Index i = 0; i < std::min(burnin, h.size()); ++i) h[i] = kMissing;
      const auto cg = evaluate::acf(h, 96);
      evaluate::emit_acf_plot(cg, join(common.out_dir, "plot_acf.csv"),
                    join(common.out_dir, "plot_acf.svg"));
    } else if (kind == "score") {
      regression::FitResult pseudo;
      pseudo.resid = resid;
      pseudo.horizons = resid.horizons;
      const auto table = evaluate::score_table({{"fit", &pseudo}}, mask);
      evaluate::emit_score_plot(table, join(common.out_dir, "plot_score.csv"),
                      join(common.out_dir, "plot_score.svg"));
      std::ofstream out(join(common.out_dir, "score_table.csv"), std::ios::binary);
      out << "horizon,rmse\n";
      for (std::size_t i = 0; i < table.horizons.size(); ++i)
        out << table.horizons[i] << "," << format_g17(table.rmse(static_cast<Index>(i), 0))
            << "\n";
    } else if (kind == "forecasts") {
      if (data_path.empty()) throw ConfigError("plot kind 'forecasts' needs --data");
      const DataSet data = load_dataset(data_path);
      const DataSet fitout = load_dataset(join(fit_dir, "forecasts.csv"));
      const auto& yhat = fitout.forecast("yhat");
      std::ifstream in(join(fit_dir, "summary.json"));
      ordered_json j = ordered_json::parse(in);
      const std::string output = j.at("output").get<std::string>();
      std::vector<int> ks = horizon > 0 ? std::vector<int>{horizon} : yhat.horizons;
      evaluate::emit_forecast_plot(data, output, yhat, ks, join(common.out_dir, "plot_forecasts.csv"),
                         join(common.out_dir, "plot_forecasts.svg"));
    } else if (kind == "coef_trace") {
      // tidy file (t,horizon,name,value): re-emit the rows of one horizon
      std::ifstream in(join(fit_dir, "coefficients.csv"), std::ios::binary);
      if (!in) throw DataError("cannot open " + join(fit_dir, "coefficients.csv"));
      const int k = horizon > 0 ? horizon : resid.horizons.front();
      std::ofstream out(join(common.out_dir, "plot_coef_trace.csv"), std::ios::binary);
      out << "t,horizon,name,value\n";
      std::string line;
      std::getline(in, line);
      while (std::getline(in, line)) {
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos) continue;
        if (std::atoi(line.substr(c1 + 1, c2 - c1 - 1).c_str()) == k) out << line << "\n";
      }
    } else {
      throw ConfigError("unknown plot kind '" + kind + "'");
    }
  }
  if (!any) throw ConfigError("empty plot selection");
  std::cout << "evaluation written to " << common.out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"online multi-horizon forecasting: two-stage models with per-horizon LS/RLS"};
  app.require_subcommand(1);

  Common common;
  std::string config, start_config, data_path, state_path, newdata_path, out_state;
  std::string scheme, kseq, direction = "both", plots = "residuals,acf,score", fit_dir;
  int burnin = -1, horizon = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--out", common.out_dir, "output directory (or HCAST_OUT)");
    cmd->add_option("--threads", common.threads,
                    "per-horizon/candidate parallelism (or HCAST_THREADS)");
    cmd->add_flag("--fixed-clock", common.fixed_clock,
                  "write a fixed timestamp (reproducible outputs)");
  };

  auto* fit = app.add_subcommand("fit", "fit a model and write forecasts/scores/state");
  fit->add_option("--config", config, "model config JSON")->required();
  fit->add_option("--data", data_path, "dataset CSV")->required();
  fit->add_option("--scheme", scheme, "ls|rls (overrides config)");
  fit->add_option("--kseq", kseq, "horizons, e.g. 1:24 or 3,18");
  fit->add_option("--burnin", burnin, "score-period burn-in rows");
  add_common(fit);

  auto* opt = app.add_subcommand("optimize", "tune offline parameters with Nelder-Mead");
  opt->add_option("--config", config, "model config JSON")->required();
  opt->add_option("--data", data_path, "dataset CSV")->required();
  opt->add_option("--scheme", scheme, "ls|rls (overrides config)");
  opt->add_option("--kseq", kseq, "horizons used for the score");
  opt->add_option("--burnin", burnin, "score-period burn-in rows");
  add_common(opt);

  auto* sel = app.add_subcommand("select", "stepwise input/integer-parameter selection (rls)");
  sel->add_option("--config", config, "full model config JSON")->required();
  sel->add_option("--start", start_config, "start model config (defaults to full)");
  sel->add_option("--data", data_path, "dataset CSV")->required();
  sel->add_option("--direction", direction, "backward|forward|both")->required();
  sel->add_option("--kseq", kseq, "horizons used for the score");
  sel->add_option("--burnin", burnin, "score-period burn-in rows");
  add_common(sel);

  auto* pred = app.add_subcommand("predict", "forecasts from a state file (read-only)");
  pred->add_option("--state", state_path, "state JSON from fit/update")->required();
  pred->add_option("--newdata", newdata_path, "new rows CSV")->required();
  add_common(pred);

  auto* upd = app.add_subcommand("update", "consume new rows and advance the state");
  upd->add_option("--state", state_path, "state JSON from fit/update")->required();
  upd->add_option("--newdata", newdata_path, "new rows CSV")->required();
  upd->add_option("--out-state", out_state, "path for the advanced state")->required();
  add_common(upd);

  auto* ev = app.add_subcommand("eval", "score tables, ACF and plot data from a fit directory");
  ev->add_option("--fit", fit_dir, "directory written by fit")->required();
  ev->add_option("--plots", plots, "comma list: forecasts,residuals,acf,score,coef_trace");
  ev->add_option("--data", data_path, "dataset CSV (needed for 'forecasts')");
  ev->add_option("--horizon", horizon, "horizon for acf/coef_trace/forecasts");
  add_common(ev);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    apply_env_defaults(common);
    if ((app.got_subcommand(fit) || app.got_subcommand(opt) || app.got_subcommand(sel) ||
         app.got_subcommand(pred) || app.got_subcommand(ev)) &&
        common.out_dir.empty())
      throw ConfigError("--out (or HCAST_OUT) is required");

    if (app.got_subcommand(fit))
      return cmd_fit(config, data_path, scheme, kseq, burnin, common);
    if (app.got_subcommand(opt))
      return cmd_optimize(config, data_path, scheme, kseq, burnin, common);
    if (app.got_subcommand(sel))
      return cmd_select(config, start_config, data_path, direction, kseq, burnin, common);
    if (app.got_subcommand(pred)) return cmd_predict(state_path, newdata_path, common);
    if (app.got_subcommand(upd)) return cmd_update(state_path, newdata_path, out_state, common);
    if (app.got_subcommand(ev)) return cmd_eval(fit_dir, plots, data_path, horizon, common);
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const StateError& e) {
    std::cerr << "state error: " << e.what() << "\n";
    return 5;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
