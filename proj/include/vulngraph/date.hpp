#pragma once

#include <chrono>
#include <cstdio>
#include <string>
#include <string_view>

#include "vulngraph/error.hpp"

namespace vulngraph {

// Calendar day in UTC, stored as days since 1970-01-01.
struct Date {
  int days = 0;

  static Date from_ymd(int y, unsigned m, unsigned d) {
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                          std::chrono::day{d}};
    if (!ymd.ok()) throw ParameterError("invalid calendar date");
    return Date{static_cast<int>(std::chrono::sys_days{ymd}.time_since_epoch().count())};
  }

  // Accepts "YYYY-MM-DD" optionally followed by a time part ("T..." or " ...").
  static Date parse(std::string_view text) {
    if (text.size() < 10 || text[4] != '-' || text[7] != '-')
      throw ParameterError("malformed ISO-8601 date: '" + std::string(text) + "'");
    if (text.size() > 10 && text[10] != 'T' && text[10] != ' ')
      throw ParameterError("malformed ISO-8601 date: '" + std::string(text) + "'");
    auto digits = [&](std::size_t from, std::size_t len) {
      int v = 0;
      for (std::size_t i = from; i < from + len; ++i) {
        if (text[i] < '0' || text[i] > '9')
          throw ParameterError("malformed ISO-8601 date: '" + std::string(text) + "'");
        v = v * 10 + (text[i] - '0');
      }
      return v;
    };
    return from_ymd(digits(0, 4), static_cast<unsigned>(digits(5, 2)),
                    static_cast<unsigned>(digits(8, 2)));
  }

  std::string iso() const {
    const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{days}}};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
  }

  Date plus_days(int n) const { return Date{days + n}; }

  friend int operator-(Date a, Date b) { return a.days - b.days; }
  friend auto operator<=>(const Date&, const Date&) = default;
};

}  // namespace vulngraph
