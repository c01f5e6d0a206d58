#ifndef SNOWFUSE_DATE_HPP
#define SNOWFUSE_DATE_HPP

#include <chrono>
#include <compare>
#include <string>
#include <string_view>

namespace snowfuse {

/// Calendar day, stored as days since 1970-01-01.
class Date {
 public:
  constexpr Date() = default;
  Date(int year, unsigned month, unsigned day);

  static Date from_days(long days) {
    Date d;
    d.days_ = days;
    return d;
  }
  /// Parses `YYYY-MM-DD`; throws ParseError otherwise.
  static Date parse(std::string_view text);

  long days() const { return days_; }
  int year() const;
  unsigned month() const;
  unsigned day() const;
  std::string iso() const;

  Date operator+(long n) const { return from_days(days_ + n); }
  Date operator-(long n) const { return from_days(days_ - n); }
  long operator-(const Date& other) const { return days_ - other.days_; }

  friend auto operator<=>(const Date&, const Date&) = default;

 private:
  long days_ = 0;
};

}  // namespace snowfuse

#endif  // SNOWFUSE_DATE_HPP
