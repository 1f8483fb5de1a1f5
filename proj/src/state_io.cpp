#include "hcast/state_io.hpp"

#include "hcast/model.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace hcast::regression {

namespace {

// The writer is hand-rolled so every number is emitted with 17 significant
// digits (lossless for doubles and byte-stable across save/load/save).
// NaN is written as null.

void emit_number(std::ostream& os, Scalar v) {
  if (is_missing(v))
    os << "null";
  else
    os << format_g17(v);
}

void emit_vector(std::ostream& os, const Vector& v) {
  os << "[";
  for (Index i = 0; i < v.size(); ++i) {
    if (i) os << ",";
    emit_number(os, v[i]);
  }
  os << "]";
}

void emit_matrix_rowmajor(std::ostream& os, const Matrix& m) {
  os << "[";
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) {
      if (r || c) os << ",";
      emit_number(os, m(r, c));
    }
  os << "]";
}

std::string json_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

using ordered_json = nlohmann::ordered_json;

Scalar number_from(const ordered_json& j) {
  if (j.is_null()) return kMissing;
  if (!j.is_number()) throw StateError("state file: expected a number");
  return j.get<Scalar>();
}

Vector vector_from(const ordered_json& j) {
  if (!j.is_array()) throw StateError("state file: expected an array");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = number_from(j[i]);
  return v;
}

Matrix matrix_from(const ordered_json& j, Index rows, Index cols) {
  if (!j.is_array() || static_cast<Index>(j.size()) != rows * cols)
    throw StateError("state file: matrix size mismatch");
  Matrix m(rows, cols);
  std::size_t i = 0;
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m(r, c) = number_from(j[i++]);
  return m;
}

}  // namespace

std::string state_to_json(const RlsState& state) {
  std::ostringstream os;
  os << "{\n";
  os << "  \"schema_version\": " << RlsState::kSchemaVersion << ",\n";
  os << "  \"model\": " << ordered_json::parse(model_to_json(state.model)).dump() << ",\n";
  os << "  \"output\": \"" << json_escape(state.output) << "\",\n";
  os << "  \"lambda\": ";
  emit_number(os, state.lambda);
  os << ",\n";
  os << "  \"step\": " << state.step << ",\n";
  os << "  \"last_time\": " << state.last_time << ",\n";
  os << "  \"time_step\": " << state.time_step << ",\n";
  os << "  \"iso_time\": " << (state.iso_time ? "true" : "false") << ",\n";

  os << "  \"horizons\": [";
  for (std::size_t i = 0; i < state.horizons.size(); ++i)
    os << (i ? "," : "") << state.horizons[i];
  os << "],\n";

  os << "  \"colnames\": [";
  for (std::size_t i = 0; i < state.colnames.size(); ++i)
    os << (i ? "," : "") << "\"" << json_escape(state.colnames[i]) << "\"";
  os << "],\n";

  os << "  \"per_horizon\": [\n";
  for (std::size_t i = 0; i < state.per_horizon.size(); ++i) {
    const auto& h = state.per_horizon[i];
    os << "    {\"k\": " << state.horizons[i] << ", \"beta\": ";
    emit_vector(os, h.beta);
    os << ", \"P\": ";
    emit_matrix_rowmajor(os, h.P);
    os << ", \"pending\": [";
    for (std::size_t r = 0; r < h.pending.size(); ++r) {
      if (r) os << ",";
      emit_vector(os, h.pending[r]);
    }
    os << "]}";
    os << (i + 1 < state.per_horizon.size() ? ",\n" : "\n");
  }
  os << "  ],\n";

  os << "  \"transform_state\": {\n";
  os << "    \"rows_seen\": " << state.transform.rows_seen << ",\n";
  os << "    \"kernels\": {";
  bool first = true;
  for (const auto& [key, ks] : state.transform.kernels) {
    if (!first) os << ",";
    first = false;
    os << "\n      \"" << json_escape(key) << "\": ";
    if (const auto* lp = std::get_if<transform::LpState>(&ks)) {
      os << "{\"type\": \"lp\", \"memory\": [";
      for (std::size_t i = 0; i < lp->memory.size(); ++i) {
        if (i) os << ",";
        emit_vector(os, lp->memory[i]);
      }
      os << "]}";
    } else if (const auto* ar = std::get_if<transform::ArState>(&ks)) {
      os << "{\"type\": \"ar\", \"consumed\": " << ar->consumed
         << ", \"max_lag\": " << ar->max_lag << ", \"tail\": [";
      for (std::size_t i = 0; i < ar->tail.size(); ++i) {
        if (i) os << ",";
        emit_number(os, ar->tail[i]);
      }
      os << "]}";
    } else if (const auto* sp = std::get_if<transform::SplineState>(&ks)) {
      os << "{\"type\": \"bspline\", \"frozen\": " << (sp->frozen ? "true" : "false")
         << ", \"knots\": ";
      emit_vector(os, sp->knots);
      os << "}";
    }
  }
  os << (first ? "" : "\n    ") << "}\n";
  os << "  }\n";
  os << "}\n";
  return os.str();
}

void save_state(const RlsState& state, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw StateError("cannot write state file " + path);
  out << state_to_json(state);
}

RlsState state_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw StateError(std::string("corrupt state file: ") + e.what());
  }
  if (!j.is_object() || !j.contains("schema_version"))
    throw StateError("corrupt state file: no schema_version");
  const int version = j["schema_version"].get<int>();
  if (version != RlsState::kSchemaVersion)
    throw StateError("state schema version " + std::to_string(version) +
                     " needs migration; this build reads version " +
                     std::to_string(RlsState::kSchemaVersion));

  try {
    RlsState s;
    s.model = parse_model_json(j.at("model").dump());
    s.output = j.at("output").get<std::string>();
    s.lambda = number_from(j.at("lambda"));
    s.step = j.at("step").get<std::int64_t>();
    s.last_time = j.at("last_time").get<std::int64_t>();
    s.time_step = j.at("time_step").get<std::int64_t>();
    s.iso_time = j.at("iso_time").get<bool>();
    s.horizons = j.at("horizons").get<std::vector<int>>();
    s.colnames = j.at("colnames").get<std::vector<std::string>>();

    const Index p = static_cast<Index>(s.colnames.size());
    const auto& ph = j.at("per_horizon");
    if (!ph.is_array() || ph.size() != s.horizons.size())
      throw StateError("state file: per_horizon size mismatch");
    for (std::size_t i = 0; i < ph.size(); ++i) {
      RlsState::Horizon h;
      if (ph[i].at("k").get<int>() != s.horizons[i])
        throw StateError("state file: per_horizon order mismatch");
      h.beta = vector_from(ph[i].at("beta"));
      if (h.beta.size() != p) throw StateError("state file: beta length mismatch");
      h.P = matrix_from(ph[i].at("P"), p, p);
      for (const auto& row : ph[i].at("pending")) {
        Vector r = vector_from(row);
        if (r.size() != p) throw StateError("state file: pending row length mismatch");
        h.pending.push_back(std::move(r));
      }
      s.per_horizon.push_back(std::move(h));
    }

    const auto& ts = j.at("transform_state");
    s.transform.rows_seen = ts.at("rows_seen").get<std::int64_t>();
    for (const auto& [key, kj] : ts.at("kernels").items()) {
      const std::string type = kj.at("type").get<std::string>();
      if (type == "lp") {
        transform::LpState lp;
        for (const auto& mem : kj.at("memory")) lp.memory.push_back(vector_from(mem));
        s.transform.kernels.emplace(key, std::move(lp));
      } else if (type == "ar") {
        transform::ArState ar;
        ar.consumed = kj.at("consumed").get<std::int64_t>();
        ar.max_lag = kj.at("max_lag").get<int>();
        for (const auto& v : kj.at("tail")) ar.tail.push_back(number_from(v));
        s.transform.kernels.emplace(key, std::move(ar));
      } else if (type == "bspline") {
        transform::SplineState sp;
        sp.frozen = kj.at("frozen").get<bool>();
        sp.knots = vector_from(kj.at("knots"));
        s.transform.kernels.emplace(key, std::move(sp));
      } else {
        throw StateError("state file: unknown kernel state type '" + type + "'");
      }
    }
    return s;
  } catch (const StateError&) {
    throw;
  } catch (const std::exception& e) {
    throw StateError(std::string("corrupt state file: ") + e.what());
  }
}

RlsState load_state(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StateError("cannot open state file " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return state_from_json(text);
}

void save_state_atomic(const RlsState& state, const std::string& path) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  save_state(state, tmp.string());
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw StateError("cannot atomically replace " + path + ": " + ec.message());
  }
}

}  // namespace hcast::regression
