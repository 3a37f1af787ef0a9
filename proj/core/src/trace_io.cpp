#include <fstream>
#include <sstream>

#include "sentinel/io.hpp"

namespace sentinel::io {

namespace {

std::string optional_time(const std::optional<double>& t) {
  return t ? format_double(*t) : "none";
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_value(const std::string& s, std::size_t line) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InputError("trace line " + std::to_string(line) + ": bad number '" + s + "'");
  }
}

}  // namespace

void write_trace_csv(std::ostream& out, const sim::TraceLog& trace) {
  for (const auto& [k, v] : trace.metadata) out << "# " << k << "=" << v << "\n";
  for (std::size_t i = 0; i < trace.detection_time.size(); ++i) {
    out << "# detection[" << i + 1 << "]=" << optional_time(trace.detection_time[i]) << "\n";
  }
  for (std::size_t i = 0; i < trace.gamma.size(); ++i) {
    out << "# gamma[" << i + 1 << "]=" << format_double(trace.gamma[i]) << "\n";
  }
  out << "# diverged=" << (trace.diverged ? "true" : "false") << "\n";
  if (trace.divergence_time) {
    out << "# divergence_time=" << format_double(*trace.divergence_time) << "\n";
  }

  out << "t";
  for (const auto& c : trace.columns) out << "," << c;
  out << ",events\n";

  // Each event goes on the first recorded row at or after its time.
  std::vector<std::string> labels(trace.rows());
  std::size_t row = 0;
  for (const auto& e : trace.events) {
    while (row < trace.rows() && trace.time[row] < e.time - 1e-12) ++row;
    const std::size_t at = row < trace.rows() ? row : trace.rows() - 1;
    if (trace.rows() == 0) break;
    if (!labels[at].empty()) labels[at] += ";";
    labels[at] += e.label();
  }
  for (std::size_t r = 0; r < trace.rows(); ++r) {
    out << format_double(trace.time[r]);
    for (std::size_t c = 0; c < trace.columns.size(); ++c) out << "," << format_double(trace.at(r, c));
    out << "," << labels[r] << "\n";
  }
}

void save_trace_csv(const std::filesystem::path& path, const sim::TraceLog& trace) {
  std::ostringstream ss;
  write_trace_csv(ss, trace);
  write_file(path, ss.str());
}

void write_trace_long(std::ostream& out, const sim::TraceLog& trace) {
  out << "series,t,value\n";
  for (std::size_t c = 0; c < trace.columns.size(); ++c) {
    for (std::size_t r = 0; r < trace.rows(); ++r) {
      out << trace.columns[c] << "," << format_double(trace.time[r]) << ","
          << format_double(trace.at(r, c)) << "\n";
    }
  }
}

std::string TraceTable::meta(const std::string& key, const std::string& fallback) const {
  for (const auto& [k, v] : metadata) {
    if (k == key) return v;
  }
  return fallback;
}

std::optional<std::size_t> TraceTable::column(std::string_view name) const {
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (columns[c] == name) return c;
  }
  return std::nullopt;
}

TraceTable read_trace_csv(std::istream& in) {
  TraceTable t;
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto body = line.substr(line.find_first_not_of("# "));
      const auto eq = body.find('=');
      if (eq != std::string::npos) t.metadata.emplace_back(body.substr(0, eq), body.substr(eq + 1));
      continue;
    }
    auto fields = split(line, ',');
    if (!header) {
      if (fields.size() < 2 || fields.front() != "t" || fields.back() != "events") {
        throw InputError("trace: header must start with 't' and end with 'events'");
      }
      t.columns.assign(fields.begin() + 1, fields.end() - 1);
      header = true;
      continue;
    }
    if (fields.size() != t.columns.size() + 2) {
      throw InputError("trace line " + std::to_string(lineno) + ": expected " +
                       std::to_string(t.columns.size() + 2) + " fields, got " +
                       std::to_string(fields.size()));
    }
    t.time.push_back(parse_value(fields.front(), lineno));
    std::vector<double> row;
    row.reserve(t.columns.size());
    for (std::size_t c = 1; c + 1 < fields.size(); ++c) row.push_back(parse_value(fields[c], lineno));
    t.rows.push_back(std::move(row));
    t.events.push_back(fields.back());
  }
  if (!header) throw InputError("trace: missing header line");
  return t;
}

TraceTable load_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  try {
    return read_trace_csv(in);
  } catch (const Error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

}  // namespace sentinel::io
