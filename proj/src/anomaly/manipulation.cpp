#include "freqadmm/anomaly/manipulation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "freqadmm/core/errors.hpp"

namespace freqadmm::anomaly {

const char* label_name(int label) {
  switch (label) {
    case kSystemic: return "systemic";
    case kFunctionAndInput: return "function_and_input";
    case kDataSize: return "data_size";
    case kInputOnly: return "input_only";
  }
  return "?";
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ContractViolation("manipulation: " + what);
}

void in_range(const std::optional<double>& f, double half, const char* name) {
  require(f.has_value(), std::string(name) + " missing");
  require(std::isfinite(*f) && std::abs(*f) <= half,
          std::string(name) + " outside [-" + std::to_string(half) + ", " +
              std::to_string(half) + "]");
}

}  // namespace

void ManipulationSpec::validate(std::size_t n_devices, const FactorRanges& r) const {
  require(label >= kSystemic && label <= kInputOnly, "unknown label " + std::to_string(label));
  if (label == kSystemic) {
    require(!target, "systemic change has no target device");
    in_range(mwf_factor, r.mwf, "mwf_factor");
    in_range(storage_factor, r.storage, "storage_factor");
    require(!input_factor && !size_factor && !new_function, "fields of another label set");
    return;
  }
  require(target && *target < n_devices, "target device out of range");
  require(!mwf_factor && !storage_factor, "fields of another label set");
  switch (label) {
    case kFunctionAndInput:
      require(new_function.has_value(), "new_function missing");
      in_range(input_factor, r.input, "input_factor");
      require(!size_factor, "fields of another label set");
      break;
    case kDataSize:
      in_range(size_factor, r.size, "size_factor");
      require(!input_factor && !new_function, "fields of another label set");
      break;
    case kInputOnly:
      in_range(input_factor, r.input, "input_factor");
      require(!size_factor && !new_function, "fields of another label set");
      break;
  }
}

std::string describe(const ManipulationSpec& s) {
  std::ostringstream os;
  os << "label=" << s.label;
  if (s.target) os << " target=" << *s.target;
  if (s.new_function) os << " function=" << describe(*s.new_function);
  if (s.input_factor) os << " input_factor=" << *s.input_factor;
  if (s.size_factor) os << " size_factor=" << *s.size_factor;
  if (s.mwf_factor) os << " mwf_factor=" << *s.mwf_factor;
  if (s.storage_factor) os << " storage_factor=" << *s.storage_factor;
  return os.str();
}

double feasible_ceiling(const ResourceBudget& b, std::size_t j) {
  double c = b.c;
  double d = b.d;
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (i == j) continue;
    c -= b.gamma[i];
    d -= b.a[i] * b.gamma[i];
  }
  return std::min(c, d / b.a[j]);
}

Problem inject(const ManipulationSpec& spec, const Problem& base, const FactorRanges& ranges) {
  spec.validate(base.functions.size(), ranges);
  Problem out = base;
  switch (spec.label) {
    case kSystemic:
      out.budget.c += *spec.mwf_factor;
      out.budget.d += *spec.storage_factor;
      out.budget.validate();
      break;
    case kFunctionAndInput: {
      const std::size_t j = *spec.target;
      UtilityFunction f = spec.new_function->shifted(*spec.input_factor);
      const double pole = domain_lower_bound(f);
      if (pole >= feasible_ceiling(out.budget, j)) {
        std::ostringstream os;
        os << "replacement " << describe(f) << " has its pole at " << pole
           << ", above the feasible ceiling of device " << j;
        throw DomainError(os.str());
      }
      out.functions[j] = f;
      break;
    }
    case kDataSize: {
      const std::size_t j = *spec.target;
      out.budget.a[j] = std::max(kMinPacketSize, out.budget.a[j] + *spec.size_factor);
      out.budget.validate();
      break;
    }
    case kInputOnly:
      out.functions[*spec.target] = base.functions[*spec.target].shifted(*spec.input_factor);
      break;
  }
  return out;
}

}  // namespace freqadmm::anomaly
