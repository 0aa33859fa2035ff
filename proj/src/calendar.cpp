#include "dposf/calendar.hpp"

#include <cstdio>

namespace dposf {

namespace chr = std::chrono;

std::string YearMonth::str() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u", year, month);
  return buf;
}

YearMonth month_of(Timestamp t) noexcept {
  const chr::sys_days day{chr::days{day_of(t)}};
  const chr::year_month_day ymd{day};
  return {static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month())};
}

Timestamp month_start(YearMonth ym) noexcept {
  const chr::sys_days day{chr::year{ym.year} / chr::month{ym.month} / 1};
  return day.time_since_epoch().count() * kSecondsPerDay;
}

std::int64_t day_of(Timestamp t) noexcept {
  return t >= 0 ? t / kSecondsPerDay : -((-t + kSecondsPerDay - 1) / kSecondsPerDay);
}

}  // namespace dposf
