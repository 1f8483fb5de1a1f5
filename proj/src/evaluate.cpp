#include "hcast/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace hcast::evaluate {

namespace {

struct Moments {
  Scalar mean = 0;
  Scalar ss = 0;  // sum of squared deviations over the non-missing values
  Index m = 0;
};

Moments moments(const Vector& x) {
  Moments mo;
  for (Index i = 0; i < x.size(); ++i)
    if (!is_missing(x[i])) {
      mo.mean += x[i];
      ++mo.m;
    }
  if (mo.m == 0) return mo;
  mo.mean /= static_cast<Scalar>(mo.m);
  for (Index i = 0; i < x.size(); ++i)
    if (!is_missing(x[i])) mo.ss += (x[i] - mo.mean) * (x[i] - mo.mean);
  return mo;
}

}  // namespace

Correlogram acf(const Vector& series, int lag_max) {
  if (lag_max < 0) throw ConfigError("acf: negative lag_max");
  const Moments mo = moments(series);
  if (mo.m < 3) throw DataError("acf: need at least 3 non-missing values");
  if (mo.ss <= 0) throw DataError("acf: zero variance");

  Correlogram cg;
  cg.m = mo.m;
  cg.band = 1.96 / std::sqrt(static_cast<Scalar>(mo.m));
  cg.values.resize(lag_max + 1);
  cg.values[0] = 1.0;
  cg.lags.push_back(0);
  const Index n = series.size();
  for (int l = 1; l <= lag_max; ++l) {
    Scalar num = 0;
    for (Index t = 0; t + l < n; ++t) {
      const Scalar a = series[t], b = series[t + l];
      if (!is_missing(a) && !is_missing(b)) num += (a - mo.mean) * (b - mo.mean);
    }
    cg.values[l] = num / mo.ss;
    cg.lags.push_back(l);
  }
  return cg;
}

Correlogram ccf(const Vector& x, const Vector& y, int lag_max) {
  if (lag_max < 0) throw ConfigError("ccf: negative lag_max");
  if (x.size() != y.size()) throw DataError("ccf: series lengths differ");
  const Moments mx = moments(x), my = moments(y);
  if (mx.m < 3 || my.m < 3) throw DataError("ccf: need at least 3 non-missing values");
  if (mx.ss <= 0 || my.ss <= 0) throw DataError("ccf: zero variance");

  Correlogram cg;
  cg.m = std::min(mx.m, my.m);
  cg.band = 1.96 / std::sqrt(static_cast<Scalar>(cg.m));
  cg.values.resize(2 * lag_max + 1);
  const Scalar denom = std::sqrt(mx.ss * my.ss);
  const Index n = x.size();
  for (int l = -lag_max; l <= lag_max; ++l) {
    // value at lag l pairs x_t with y_{t-l}
    Scalar num = 0;
    for (Index t = 0; t < n; ++t) {
      const Index s = t - l;
      if (s < 0 || s >= n) continue;
      if (is_missing(x[t]) || is_missing(y[s])) continue;
      num += (x[t] - mx.mean) * (y[s] - my.mean);
    }
    cg.values[l + lag_max] = num / denom;
    cg.lags.push_back(l);
  }
  return cg;
}

Vector cumulative_squared_error(const ResidualMatrix& resid, int horizon) {
  const Index j = resid.col_index(horizon);
  Vector out(resid.rows());
  Scalar acc = 0;
  for (Index t = 0; t < resid.rows(); ++t) {
    const Scalar r = resid.values(t, j);
    if (!is_missing(r)) acc += r * r;
    out[t] = acc;
  }
  return out;
}

ScoreTable score_table(const std::vector<std::pair<std::string, const regression::FitResult*>>& fits,
                       const Mask& mask) {
  if (fits.empty()) throw ConfigError("score_table: no fits given");
  const auto& horizons = fits.front().second->horizons;
  for (const auto& [name, fit] : fits)
    if (fit->horizons != horizons)
      throw ConfigError("score_table: fit '" + name + "' has a different horizon list");

  Mask shared = mask;
  for (const auto& [name, fit] : fits) shared = shared && complete_rows(fit->resid.values);

  ScoreTable table;
  table.horizons = horizons;
  table.rmse.resize(static_cast<Index>(horizons.size()), static_cast<Index>(fits.size()));
  for (std::size_t mcol = 0; mcol < fits.size(); ++mcol) {
    table.models.push_back(fits[mcol].first);
    const auto report = tuning::score(fits[mcol].second->resid, shared);
    table.rmse.col(static_cast<Index>(mcol)) = report.values;
    table.rows_used = report.rows_used;
  }
  return table;
}

// ---- plot-data emission ------------------------------------------------

namespace {

std::string svg_polyline(const std::vector<Scalar>& xs, const std::vector<Scalar>& ys,
                         Scalar x0, Scalar x1, Scalar y0, Scalar y1, const char* color) {
  constexpr Scalar W = 760, H = 360, PX = 30, PY = 20;
  std::ostringstream os;
  os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.2\" points=\"";
  bool pen_up = true;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (is_missing(ys[i])) {
      pen_up = true;
      continue;
    }
    const Scalar px = PX + (xs[i] - x0) / (x1 > x0 ? x1 - x0 : 1.0) * W;
    const Scalar py = PY + H - (ys[i] - y0) / (y1 > y0 ? y1 - y0 : 1.0) * H;
    if (pen_up && i > 0) os << "\" /><polyline fill=\"none\" stroke=\"" << color
                            << "\" stroke-width=\"1.2\" points=\"";
    os << px << "," << py << " ";
    pen_up = false;
  }
  os << "\" />\n";
  return os.str();
}

void write_svg(const std::vector<PlotSeries>& series, const std::string& path) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                  "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
  Scalar x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  bool seen = false;
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (is_missing(s.y[i])) continue;
      if (!seen) {
        x0 = x1 = s.x[i];
        y0 = y1 = s.y[i];
        seen = true;
      }
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"820\" height=\"420\" "
         "viewBox=\"0 0 820 420\">\n";
  out << "<rect x=\"30\" y=\"20\" width=\"760\" height=\"360\" fill=\"white\" "
         "stroke=\"#cccccc\"/>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const char* color = palette[i % 8];
    out << svg_polyline(series[i].x, series[i].y, x0, x1, y0, y1, color);
    out << "<text x=\"36\" y=\"" << 36 + 16 * i << "\" font-size=\"12\" fill=\"" << color
        << "\">" << series[i].name << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace

void emit_plot_data(const std::vector<PlotSeries>& series, const std::string& x_label,
                    const std::string& csv_path, const std::string& svg_path) {
  if (series.empty()) throw ConfigError("emit_plot_data: empty selection");
  std::ofstream out(csv_path, std::ios::binary);
  if (!out) throw DataError("cannot write " + csv_path);
  out << x_label << ",series,value\n";
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw ConfigError("emit_plot_data: ragged series");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      out << format_g17(s.x[i]) << "," << s.name << ",";
      if (!is_missing(s.y[i])) out << format_g17(s.y[i]);
      out << "\n";
    }
  }
  if (!svg_path.empty()) write_svg(series, svg_path);
}

void emit_forecast_plot(const DataSet& data, const std::string& output,
                        const ForecastMatrix& yhat, const std::vector<int>& horizons,
                        const std::string& csv_path, const std::string& svg_path) {
  if (horizons.empty()) throw ConfigError("emit_forecast_plot: empty horizon selection");
  std::vector<PlotSeries> series;

  PlotSeries obs;
  obs.name = output;
  const Vector& y = data.observation(output);
  for (Index t = 0; t < y.size(); ++t) {
    obs.x.push_back(static_cast<Scalar>(t));
    obs.y.push_back(y[t]);
  }
  series.push_back(std::move(obs));

  // forecasts drawn at their target time t+k
  for (int k : horizons) {
    PlotSeries s;
    s.name = "yhat.k" + std::to_string(k);
    const Index j = yhat.col_index(k);
    for (Index t = 0; t < yhat.rows(); ++t) {
      s.x.push_back(static_cast<Scalar>(t + k));
      s.y.push_back(yhat.values(t, j));
    }
    series.push_back(std::move(s));
  }
  emit_plot_data(series, "time", csv_path, svg_path);
}

void emit_residual_plot(const ResidualMatrix& resid, const std::vector<int>& horizons,
                        const std::string& csv_path, const std::string& svg_path) {
  if (horizons.empty()) throw ConfigError("emit_residual_plot: empty horizon selection");
  std::vector<PlotSeries> series;
  for (int k : horizons) {
    PlotSeries s;
    s.name = "h" + std::to_string(k);
    const Index j = resid.col_index(k);
    for (Index t = 0; t < resid.rows(); ++t) {
      s.x.push_back(static_cast<Scalar>(t));
      s.y.push_back(resid.values(t, j));
    }
    series.push_back(std::move(s));
  }
  emit_plot_data(series, "time", csv_path, svg_path);
}

void emit_acf_plot(const Correlogram& cg, const std::string& csv_path,
                   const std::string& svg_path) {
  std::vector<PlotSeries> series(3);
  series[0].name = "acf";
  series[1].name = "band_upper";
  series[2].name = "band_lower";
  for (std::size_t i = 0; i < cg.lags.size(); ++i) {
    const Scalar lag = static_cast<Scalar>(cg.lags[i]);
    series[0].x.push_back(lag);
    series[0].y.push_back(cg.values[static_cast<Index>(i)]);
    series[1].x.push_back(lag);
    series[1].y.push_back(cg.band);
    series[2].x.push_back(lag);
    series[2].y.push_back(-cg.band);
  }
  emit_plot_data(series, "lag", csv_path, svg_path);
}

void emit_score_plot(const ScoreTable& table, const std::string& csv_path,
                     const std::string& svg_path) {
  std::vector<PlotSeries> series;
  for (std::size_t m = 0; m < table.models.size(); ++m) {
    PlotSeries s;
    s.name = table.models[m];
    for (std::size_t i = 0; i < table.horizons.size(); ++i) {
      s.x.push_back(static_cast<Scalar>(table.horizons[i]));
      s.y.push_back(table.rmse(static_cast<Index>(i), static_cast<Index>(m)));
    }
    series.push_back(std::move(s));
  }
  emit_plot_data(series, "horizon", csv_path, svg_path);
}

void emit_coef_trace_plot(const regression::FitResult& fit, int horizon, const std::string& csv_path,
                          const std::string& svg_path) {
  if (fit.coef_trace.empty())
    throw ConfigError("emit_coef_trace_plot: fit carries no coefficient traces");
  const auto it = std::find(fit.horizons.begin(), fit.horizons.end(), horizon);
  if (it == fit.horizons.end())
    throw ConfigError("emit_coef_trace_plot: horizon k" + std::to_string(horizon) +
                      " not in the fit");
  const Matrix& trace = fit.coef_trace[static_cast<std::size_t>(it - fit.horizons.begin())];

  std::vector<PlotSeries> series;
  for (Index j = 0; j < trace.cols(); ++j) {
    PlotSeries s;
    s.name = fit.colnames[static_cast<std::size_t>(j)];
    for (Index t = 0; t < trace.rows(); ++t) {
      s.x.push_back(static_cast<Scalar>(t));
      s.y.push_back(trace(t, j));
    }
    series.push_back(std::move(s));
  }
  emit_plot_data(series, "time", csv_path, svg_path);
}

}  // namespace hcast::evaluate
