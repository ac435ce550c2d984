#include "freqadmm/anomaly/trace_io.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>
#include <vector>

namespace freqadmm::anomaly {

std::string format_real(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

double parse_real(std::string_view s) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty()) {
    throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  }
  return v;
}

const char* phase_name(Phase p) { return p == Phase::Normal ? "normal" : "anomalous"; }

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

std::string join(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? ";" : "") + format_real(xs[i]);
  return out;
}

std::string columns(std::size_t n) {
  std::string out = "iteration";
  for (std::size_t i = 1; i <= n; ++i) out += ",z" + std::to_string(i);
  for (std::size_t i = 1; i <= n; ++i) out += ",v" + std::to_string(i);
  return out + ",label,phase";
}

template <typename Int>
Int parse_int(std::string_view s) {
  Int v{};
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty()) {
    throw std::invalid_argument("not an integer: '" + std::string(s) + "'");
  }
  return v;
}

IterationTrace parse_header(const std::string& line) {
  const auto fields = split(line, ' ');
  if (fields.empty() || fields[0] != "#trace") throw TraceIoError("trace: missing #trace header");
  std::map<std::string, std::string, std::less<>> kv;
  for (std::size_t i = 1; i < fields.size(); ++i) {
    const auto eq = fields[i].find('=');
    if (eq == std::string_view::npos) {
      throw TraceIoError("trace header: bad field '" + std::string(fields[i]) + "'");
    }
    kv.emplace(std::string(fields[i].substr(0, eq)), std::string(fields[i].substr(eq + 1)));
  }
  auto need = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw TraceIoError(std::string("trace header: missing ") + key);
    return it->second;
  };
  IterationTrace t;
  try {
    t.devices = parse_int<std::size_t>(need("n"));
    t.budget.c = parse_real(need("c"));
    t.budget.d = parse_real(need("d"));
    for (auto s : split(need("a"), ';')) t.budget.a.push_back(parse_real(s));
    for (auto s : split(need("gamma"), ';')) t.budget.gamma.push_back(parse_real(s));
  } catch (const std::invalid_argument& e) {
    throw TraceIoError(std::string("trace header: ") + e.what());
  }
  if (t.budget.a.size() != t.devices || t.budget.gamma.size() != t.devices) {
    throw TraceIoError("trace header: a and gamma must list n values");
  }
  if (need("columns") != columns(t.devices)) {
    throw TraceIoError("trace header: unexpected columns '" + need("columns") + "'");
  }
  return t;
}

TraceRow parse_row(std::string_view line, std::size_t n, std::size_t row) {
  const auto f = split(line, ',');
  if (f.size() != 2 * n + 3) {
    throw TraceIoError("trace row " + std::to_string(row) + ": expected " +
                           std::to_string(2 * n + 3) + " fields, got " + std::to_string(f.size()),
                       row);
  }
  TraceRow r;
  try {
    r.iteration = parse_int<std::int64_t>(f[0]);
    for (std::size_t i = 0; i < n; ++i) r.z.push_back(parse_real(f[1 + i]));
    for (std::size_t i = 0; i < n; ++i) r.v.push_back(parse_real(f[1 + n + i]));
    r.label = parse_int<int>(f[1 + 2 * n]);
  } catch (const std::invalid_argument& e) {
    throw TraceIoError("trace row " + std::to_string(row) + ": " + e.what(), row);
  }
  if (r.label < 0 || r.label > 3) {
    throw TraceIoError("trace row " + std::to_string(row) + ": label out of range", row);
  }
  const auto phase = f[2 + 2 * n];
  if (phase == "normal") {
    r.phase = Phase::Normal;
  } else if (phase == "anomalous") {
    r.phase = Phase::Anomalous;
  } else {
    throw TraceIoError("trace row " + std::to_string(row) + ": unknown phase '" +
                           std::string(phase) + "'",
                       row);
  }
  return r;
}

}  // namespace

void write_trace(const IterationTrace& t, std::ostream& os) {
  const std::size_t n = t.devices;
  os << "#trace n=" << n << " c=" << format_real(t.budget.c) << " d=" << format_real(t.budget.d)
     << " a=" << join(t.budget.a) << " gamma=" << join(t.budget.gamma)
     << " columns=" << columns(n) << '\n';
  std::string line;
  for (const auto& r : t.rows) {
    if (r.z.size() != n || r.v.size() != n) {
      throw TraceIoError("trace: row " + std::to_string(r.iteration) + " has the wrong width");
    }
    line = std::to_string(r.iteration);
    for (double z : r.z) line += ',' + format_real(z);
    for (double v : r.v) line += ',' + format_real(v);
    line += ',' + std::to_string(r.label) + ',' + phase_name(r.phase) + '\n';
    os << line;
  }
}

IterationTrace read_trace(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw TraceIoError("trace: empty input");
  IterationTrace t = parse_header(line);
  std::size_t row = 0;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty() && is.peek() == std::char_traits<char>::eof()) break;
    t.rows.push_back(parse_row(line, t.devices, row));
  }
  return t;
}

void export_trace(const IterationTrace& trace, const std::filesystem::path& path) {
  auto tmp = path;
  tmp += ".partial";
  auto fail = [&](const std::string& why) {
    std::error_code ec;
    std::filesystem::remove(tmp, ec);
    throw TraceIoError("export " + path.string() + ": " + why);
  };
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) fail("cannot open for writing");
    try {
      write_trace(trace, os);
    } catch (const TraceIoError& e) {
      os.close();
      fail(e.what());
    }
    os.flush();
    if (!os) fail("write failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ec.message());
}

IterationTrace import_trace(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw TraceIoError("import " + path.string() + ": cannot open");
  return read_trace(is);
}

}  // namespace freqadmm::anomaly
