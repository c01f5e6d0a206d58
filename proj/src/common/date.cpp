#include "snowfuse/date.hpp"

#include <charconv>
#include <cstdio>

#include "snowfuse/error.hpp"

namespace snowfuse {

namespace chr = std::chrono;

Date::Date(int year, unsigned month, unsigned day) {
  const chr::year_month_day ymd{chr::year{year}, chr::month{month}, chr::day{day}};
  if (!ymd.ok()) {
    throw ArgumentError("invalid calendar date " + std::to_string(year) + "-" +
                        std::to_string(month) + "-" + std::to_string(day));
  }
  days_ = chr::sys_days{ymd}.time_since_epoch().count();
}

Date Date::parse(std::string_view text) {
  auto fail = [&] { return ParseError("invalid ISO date '" + std::string(text) + "'"); };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw fail();
  int y = 0;
  unsigned m = 0, d = 0;
  auto field = [&](std::size_t pos, std::size_t len, auto& out) {
    auto [p, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
    if (ec != std::errc{} || p != text.data() + pos + len) throw fail();
  };
  field(0, 4, y);
  field(5, 2, m);
  field(8, 2, d);
  const chr::year_month_day ymd{chr::year{y}, chr::month{m}, chr::day{d}};
  if (!ymd.ok()) throw fail();
  return from_days(chr::sys_days{ymd}.time_since_epoch().count());
}

static chr::year_month_day civil(long days) { return chr::year_month_day{chr::sys_days{chr::days{days}}}; }

int Date::year() const { return static_cast<int>(civil(days_).year()); }
unsigned Date::month() const { return static_cast<unsigned>(civil(days_).month()); }
unsigned Date::day() const { return static_cast<unsigned>(civil(days_).day()); }

std::string Date::iso() const {
  const auto ymd = civil(days_);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

}  // namespace snowfuse
