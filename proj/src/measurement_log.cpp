#include "ambislam/measurement_log.hpp"

#include <algorithm>

namespace ambislam {

std::uint32_t recordStep(const LogRecord& r) {
  return std::visit(
      [](const auto& rec) -> std::uint32_t {
        using T = std::decay_t<decltype(rec)>;
        if constexpr (std::is_same_v<T, OdometryRecord>) {
          return rec.to;
        } else {
          return rec.step;
        }
      },
      r);
}

std::uint32_t MeasurementLog::stepCount() const {
  std::uint32_t n = 0;
  for (const auto& r : records) n = std::max(n, recordStep(r) + 1);
  return n;
}

}  // namespace ambislam
