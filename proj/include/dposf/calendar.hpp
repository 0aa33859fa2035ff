#pragma once

#include <chrono>
#include <compare>
#include <string>

#include "dposf/ledger.hpp"

namespace dposf {

/// UTC calendar month.
struct YearMonth {
  int year = 1970;
  unsigned month = 1;

  friend auto operator<=>(const YearMonth&, const YearMonth&) = default;

  YearMonth next() const noexcept { return month == 12 ? YearMonth{year + 1, 1} : YearMonth{year, month + 1}; }
  /// "YYYY-MM"
  std::string str() const;
};

YearMonth month_of(Timestamp t) noexcept;
/// First second of the month.
Timestamp month_start(YearMonth ym) noexcept;
/// Days since the Unix epoch (UTC), floor.
std::int64_t day_of(Timestamp t) noexcept;

}  // namespace dposf
