#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>

#include "freqadmm/core/trace.hpp"

namespace freqadmm::anomaly {

// Reading or writing a trace failed. row() is the one-based data row for
// a malformed row, 0 for header and file level problems.
class TraceIoError : public std::runtime_error {
 public:
  TraceIoError(const std::string& what, std::size_t row = 0)
      : std::runtime_error(what), row_(row) {}
  [[nodiscard]] std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

// Shortest decimal that reads back to the same double.
std::string format_real(double v);
// Whole-string parse; throws std::invalid_argument otherwise.
double parse_real(std::string_view s);

const char* phase_name(Phase p);

/// Text format, one header line then one line per row:
///
///   #trace n=3 c=10 d=20 a=2;3;5 gamma=1;1;1 columns=iteration,z1,z2,z3,v1,v2,v3,label,phase
///   0,2.02,2.72,1.56,2.02,2.72,1.56,0,normal
///
/// Reals are written shortest round-trip, so import(export(t)) == t.
void write_trace(const IterationTrace& trace, std::ostream& os);
IterationTrace read_trace(std::istream& is);

// Writes through a sibling temporary and renames it into place; on any
// failure the temporary is removed and TraceIoError is thrown.
void export_trace(const IterationTrace& trace, const std::filesystem::path& path);
IterationTrace import_trace(const std::filesystem::path& path);

}  // namespace freqadmm::anomaly
