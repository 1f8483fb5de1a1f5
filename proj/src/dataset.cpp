#include "hcast/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace hcast {

namespace {

// RFC-4180 reader: quoted fields, embedded commas/quotes/newlines, CRLF.
std::vector<std::vector<std::string>> read_csv_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::vector<std::vector<std::string>> records;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto end_field = [&]() {
    row.push_back(field);
    field.clear();
  };
  auto end_row = [&]() {
    end_field();
    records.push_back(std::move(row));
    row.clear();
  };
  while (i < n) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < n && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"' && field.empty()) {
      quoted = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r') {
      // swallow; the \n ends the row
    } else if (c == '\n') {
      end_row();
    } else {
      field += c;
    }
    ++i;
  }
  if (quoted) throw DataError(path + ": unterminated quoted field");
  if (!field.empty() || !row.empty()) end_row();
  return records;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

Scalar parse_cell(const std::string& s, std::size_t row, const std::string& col) {
  if (s.empty()) return kMissing;
  const char* begin = s.c_str();
  char* end = nullptr;
  Scalar v = std::strtod(begin, &end);
  if (end != begin + s.size())
    throw DataError("non-numeric cell at row " + std::to_string(row) + ", column " + col +
                    ": '" + s + "'");
  return v;
}

bool all_digits(const std::string& s) {
  if (s.empty()) return false;
  std::size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i == s.size()) return false;
  for (; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  return true;
}

// Days since 1970-01-01 for a civil date (proleptic Gregorian).
std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, int& m, int& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yy + (m <= 2));
}

}  // namespace

std::int64_t parse_time(const std::string& text) {
  if (all_digits(text)) return std::strtoll(text.c_str(), nullptr, 10);
  int y, mo, d, h, mi, s;
  char sep;
  if (std::sscanf(text.c_str(), "%d-%d-%d%c%d:%d:%d", &y, &mo, &d, &sep, &h, &mi, &s) == 7 &&
      (sep == ' ' || sep == 'T')) {
    return days_from_civil(y, mo, d) * 86400 + h * 3600 + mi * 60 + s;
  }
  throw DataError("cannot parse timestamp '" + text + "' (expect ISO-8601 UTC or integer)");
}

std::string format_time_iso(std::int64_t epoch_seconds) {
  std::int64_t days = epoch_seconds / 86400;
  std::int64_t rem = epoch_seconds % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  int y, m, d;
  civil_from_days(days, y, m, d);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", y, m, d,
                static_cast<int>(rem / 3600), static_cast<int>((rem % 3600) / 60),
                static_cast<int>(rem % 60));
  return buf;
}

bool DataSet::has_observation(const std::string& name) const {
  return observations.count(name) > 0;
}

bool DataSet::has_forecast(const std::string& name) const { return forecasts.count(name) > 0; }

const Vector& DataSet::observation(const std::string& name) const {
  auto it = observations.find(name);
  if (it == observations.end()) throw DataError("no observation series named '" + name + "'");
  return it->second;
}

const ForecastMatrix& DataSet::forecast(const std::string& name) const {
  auto it = forecasts.find(name);
  if (it == forecasts.end()) throw DataError("no forecast matrix named '" + name + "'");
  return it->second;
}

void DataSet::validate() const {
  const Index n = rows();
  for (std::size_t i = 1; i < t.size(); ++i)
    if (t[i] <= t[i - 1]) throw DataError("time index not strictly increasing");
  for (const auto& [name, v] : observations)
    if (v.size() != n) throw DataError("observation '" + name + "' has wrong length");
  for (const auto& [name, m] : forecasts) {
    m.validate();
    if (m.rows() != n) throw DataError("forecast matrix '" + name + "' has wrong row count");
  }
}

DataSet load_dataset(const std::string& path, const std::string& horizon_marker) {
  auto records = read_csv_records(path);
  if (records.empty()) throw DataError(path + ": empty file (header row mandatory)");
  const auto& header = records.front();

  std::vector<std::string> names = header;
  for (std::size_t i = 0; i < names.size(); ++i)
    for (std::size_t j = i + 1; j < names.size(); ++j)
      if (names[i] == names[j]) throw DataError(path + ": duplicate column '" + names[i] + "'");

  auto t_it = std::find(names.begin(), names.end(), "t");
  if (t_it == names.end()) throw DataError(path + ": column 't' not found");
  const std::size_t t_col = static_cast<std::size_t>(t_it - names.begin());

  const std::size_t n = records.size() - 1;
  const std::size_t ncol = names.size();

  DataSet ds;
  ds.t.reserve(n);
  ds.iso_time = false;

  // Split the header into observations and forecast-matrix columns.
  struct FCol {
    std::string name;
    int horizon;
    std::size_t col;
  };
  std::vector<FCol> fcols;
  std::vector<std::pair<std::string, std::size_t>> ocols;
  for (std::size_t c = 0; c < ncol; ++c) {
    if (c == t_col) continue;
    const std::string& col = names[c];
    auto pos = col.rfind(horizon_marker);
    bool is_forecast = false;
    if (pos != std::string::npos && pos > 0) {
      const std::string tail = col.substr(pos + horizon_marker.size());
      if (all_digits(tail) && tail[0] != '-' && tail[0] != '+') {
        fcols.push_back({col.substr(0, pos), std::atoi(tail.c_str()), c});
        is_forecast = true;
      }
    }
    if (!is_forecast) ocols.emplace_back(col, c);
  }

  std::map<std::string, Vector> obs;
  for (const auto& [name, c] : ocols) obs[name] = Vector::Constant(n, kMissing);

  std::map<std::string, std::vector<std::pair<int, std::size_t>>> groups;
  for (const auto& f : fcols) groups[f.name].emplace_back(f.horizon, f.col);

  std::map<std::string, ForecastMatrix> fms;
  for (auto& [name, cols] : groups) {
    std::sort(cols.begin(), cols.end());
    for (std::size_t i = 1; i < cols.size(); ++i)
      if (cols[i].first == cols[i - 1].first)
        throw DataError(path + ": duplicate column '" + name + horizon_marker +
                        std::to_string(cols[i].first) + "'");
    ForecastMatrix m;
    for (const auto& [k, c] : cols) m.horizons.push_back(k);
    m.values = Matrix::Constant(n, static_cast<Index>(cols.size()), kMissing);
    fms[name] = std::move(m);
  }

  for (std::size_t r = 0; r < n; ++r) {
    const auto& rec = records[r + 1];
    if (rec.size() != ncol)
      throw DataError(path + ": row " + std::to_string(r + 2) + " has " +
                      std::to_string(rec.size()) + " fields, expected " + std::to_string(ncol));
    const std::string& tcell = rec[t_col];
    if (!all_digits(tcell)) ds.iso_time = true;
    ds.t.push_back(parse_time(tcell));
  }

  for (const auto& [name, c] : ocols) {
    Vector& v = obs[name];
    for (std::size_t r = 0; r < n; ++r) v[static_cast<Index>(r)] = parse_cell(records[r + 1][c], r + 2, name);
  }
  for (auto& [name, cols] : groups) {
    ForecastMatrix& m = fms[name];
    for (Index j = 0; j < static_cast<Index>(cols.size()); ++j) {
      const std::size_t c = cols[static_cast<std::size_t>(j)].second;
      for (std::size_t r = 0; r < n; ++r)
        m.values(static_cast<Index>(r), j) = parse_cell(records[r + 1][c], r + 2, names[c]);
    }
  }

  // Equidistance; sampling period is normalized to one step internally.
  for (std::size_t i = 1; i < ds.t.size(); ++i)
    if (ds.t[i] <= ds.t[i - 1])
      throw DataError(path + ": time not strictly increasing at row " + std::to_string(i + 2));
  if (ds.t.size() >= 3) {
    const std::int64_t step = ds.t[1] - ds.t[0];
    for (std::size_t i = 2; i < ds.t.size(); ++i) {
      if (ds.t[i] - ds.t[i - 1] != step)
        throw DataError(path + ": non-equidistant time, first offending gap at row " +
                        std::to_string(i + 2) + " (" + std::to_string(ds.t[i] - ds.t[i - 1]) +
                        " vs " + std::to_string(step) + ")");
    }
  }

  ds.observations = std::move(obs);
  ds.forecasts = std::move(fms);
  ds.validate();
  return ds;
}

void save_dataset(const DataSet& data, const std::string& path,
                  const std::string& horizon_marker) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);

  std::vector<std::string> header{"t"};
  for (const auto& [name, v] : data.observations) header.push_back(name);
  for (const auto& [name, m] : data.forecasts)
    for (int k : m.horizons) header.push_back(name + horizon_marker + std::to_string(k));

  for (std::size_t i = 0; i < header.size(); ++i)
    out << (i ? "," : "") << csv_escape(header[i]);
  out << "\n";

  auto cell = [](Scalar v) { return is_missing(v) ? std::string() : format_g17(v); };
  for (Index r = 0; r < data.rows(); ++r) {
    out << (data.iso_time ? format_time_iso(data.t[static_cast<std::size_t>(r)])
                          : std::to_string(data.t[static_cast<std::size_t>(r)]));
    for (const auto& [name, v] : data.observations) out << "," << cell(v[r]);
    for (const auto& [name, m] : data.forecasts)
      for (Index j = 0; j < m.cols(); ++j) out << "," << cell(m.values(r, j));
    out << "\n";
  }
}

Mask in_range(std::int64_t start, std::int64_t end, const std::vector<std::int64_t>& t) {
  Mask mask(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) mask[static_cast<Index>(i)] = t[i] > start && t[i] <= end;
  return mask;
}

Mask in_range(std::int64_t start, const std::vector<std::int64_t>& t) {
  return in_range(start, std::numeric_limits<std::int64_t>::max(), t);
}

DataSet subset(const DataSet& data, const Mask& keep) {
  if (keep.size() != data.rows()) throw DataError("subset: mask length mismatch");
  const Index m = count_true(keep);
  if (m == 0) throw DataError("subset: empty selection");

  DataSet out;
  out.iso_time = data.iso_time;
  out.t.reserve(static_cast<std::size_t>(m));
  std::vector<Index> idx;
  idx.reserve(static_cast<std::size_t>(m));
  for (Index i = 0; i < keep.size(); ++i)
    if (keep[i]) {
      idx.push_back(i);
      out.t.push_back(data.t[static_cast<std::size_t>(i)]);
    }
  for (const auto& [name, v] : data.observations) {
    Vector nv(m);
    for (Index i = 0; i < m; ++i) nv[i] = v[idx[static_cast<std::size_t>(i)]];
    out.observations[name] = std::move(nv);
  }
  for (const auto& [name, fm] : data.forecasts) {
    ForecastMatrix nm;
    nm.horizons = fm.horizons;
    nm.values.resize(m, fm.cols());
    for (Index i = 0; i < m; ++i) nm.values.row(i) = fm.values.row(idx[static_cast<std::size_t>(i)]);
    out.forecasts[name] = std::move(nm);
  }
  return out;
}

DataSet subset(const DataSet& data, const std::vector<int>& horizons) {
  if (horizons.empty()) throw DataError("subset: empty horizon selection");
  DataSet out;
  out.t = data.t;
  out.iso_time = data.iso_time;
  out.observations = data.observations;
  for (const auto& [name, fm] : data.forecasts) {
    try {
      out.forecasts[name] = fm.select_horizons(horizons);
    } catch (const DataError& e) {
      throw DataError("subset: matrix '" + name + "': " + e.what());
    }
  }
  return out;
}

Mask complete_cases(const std::vector<std::pair<std::string, const ForecastMatrix*>>& matrices,
                    const std::vector<int>& horizons) {
  if (matrices.empty()) throw DataError("complete_cases: no matrices given");
  const Index n = matrices.front().second->rows();
  Mask mask = all_true(n);
  for (const auto& [name, m] : matrices) {
    if (m->rows() != n) throw DataError("complete_cases: matrix '" + name + "' row mismatch");
    for (int k : horizons) {
      if (!m->has_horizon(k))
        throw DataError("complete_cases: matrix '" + name + "' lacks horizon k" +
                        std::to_string(k));
      const Index j = m->col_index(k);
      for (Index t = 0; t < n; ++t)
        if (is_missing(m->values(t, j))) mask[t] = false;
    }
  }
  return mask;
}

Mask complete_cases(const ForecastMatrix& m) { return complete_rows(m.values); }

ResidualMatrix residuals(const ForecastMatrix& yhat, const Vector& y) {
  if (yhat.rows() != y.size()) throw DataError("residuals: row count mismatch");
  const Index n = yhat.rows();
  ResidualMatrix r;
  r.horizons = yhat.horizons;
  r.values = Matrix::Constant(n, yhat.cols(), kMissing);
  for (Index j = 0; j < yhat.cols(); ++j) {
    const Index k = yhat.horizons[static_cast<std::size_t>(j)];
    for (Index s = k; s < n; ++s) r.values(s, j) = y[s] - yhat.values(s - k, j);
  }
  return r;
}

}  // namespace hcast
