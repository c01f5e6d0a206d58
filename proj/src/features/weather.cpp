#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "snowfuse/error.hpp"
#include "snowfuse/features.hpp"
#include "snowfuse/text.hpp"

namespace snowfuse::features {

std::array<double, kWeatherFields> WeatherRecord::row() const {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  return {snow_cover.value_or(nan), albedo.value_or(nan), precip_total, temp_max, temp_min, wind_dir, wind_vel};
}

WeatherSeries::WeatherSeries(std::vector<WeatherRecord> records) : records_(std::move(records)) {
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    const auto where = [&] { return "weather record " + r.date.iso(); };
    if (i > 0 && !(records_[i - 1].date < r.date)) throw ArgumentError(where() + ": dates must be strictly increasing");
    auto fraction = [&](const std::optional<double>& v, const char* name) {
      if (v && !(*v >= 0.0 && *v <= 1.0)) throw ArgumentError(where() + ": " + name + " outside [0,1]");
    };
    fraction(r.snow_cover, "snow_cover");
    fraction(r.albedo, "albedo");
    if (!(r.wind_dir >= 0.0 && r.wind_dir < 360.0)) throw ArgumentError(where() + ": wind_dir outside [0,360)");
    for (double v : {r.precip_total, r.temp_max, r.temp_min, r.wind_vel}) {
      if (!std::isfinite(v)) throw ArgumentError(where() + ": non-finite value");
    }
  }
}

const WeatherRecord* WeatherSeries::find(Date d) const {
  auto it = std::lower_bound(records_.begin(), records_.end(), d,
                             [](const WeatherRecord& r, Date x) { return r.date < x; });
  return (it != records_.end() && it->date == d) ? &*it : nullptr;
}

WeatherSeries parse_weather_csv(const std::vector<std::string>& lines, const std::string& source) {
  if (lines.empty() || text::trim(lines.front()) != kWeatherCsvHeader) {
    throw ParseError(source + ": expected header '" + kWeatherCsvHeader + "'");
  }
  std::vector<WeatherRecord> records;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    const auto f = text::split(lines[i]);
    const std::string where = source + " line " + std::to_string(i + 1);
    if (f.size() != kWeatherFields + 1) {
      throw ParseError(where + ": expected 8 fields, got " + std::to_string(f.size()));
    }
    WeatherRecord r;
    r.date = Date::parse(text::trim(f[0]));
    auto optional_field = [&](const std::string& s, const char* name) -> std::optional<double> {
      if (text::trim(s).empty()) return std::nullopt;
      return text::parse_double(s, where + " field " + name);
    };
    auto required_field = [&](const std::string& s, const char* name) {
      if (text::trim(s).empty()) throw ParseError(where + ": missing required field " + name);
      return text::parse_double(s, where + " field " + name);
    };
    r.snow_cover = optional_field(f[1], "snow_cover");
    r.albedo = optional_field(f[2], "albedo");
    r.precip_total = required_field(f[3], "precip_total");
    r.temp_max = required_field(f[4], "temp_max");
    r.temp_min = required_field(f[5], "temp_min");
    r.wind_dir = required_field(f[6], "wind_dir");
    r.wind_vel = required_field(f[7], "wind_vel");
    records.push_back(r);
  }
  try {
    return WeatherSeries(std::move(records));
  } catch (const ArgumentError& e) {
    throw ParseError(source + ": " + e.what());
  }
}

WeatherSeries read_weather_csv(const std::filesystem::path& path) {
  return parse_weather_csv(text::read_lines(path), path.string());
}

std::string format_weather_csv(const WeatherSeries& series) {
  std::ostringstream os;
  os << kWeatherCsvHeader << '\n';
  auto opt = [](const std::optional<double>& v) { return v ? text::format_double(*v) : std::string(); };
  for (const auto& r : series.records()) {
    os << r.date.iso() << ',' << opt(r.snow_cover) << ',' << opt(r.albedo) << ',' << text::format_double(r.precip_total)
       << ',' << text::format_double(r.temp_max) << ',' << text::format_double(r.temp_min) << ','
       << text::format_double(r.wind_dir) << ',' << text::format_double(r.wind_vel) << '\n';
  }
  return os.str();
}

void write_weather_csv(const WeatherSeries& series, const std::filesystem::path& path) {
  text::write_file(path, format_weather_csv(series));
}

std::vector<WeatherRecord> weather_window(const WeatherSeries& series, Date target) {
  std::vector<WeatherRecord> window;
  std::vector<std::string> missing;
  for (long k = static_cast<long>(kWeatherWindowDays) - 1; k >= 0; --k) {
    const Date d = target - k;
    if (const auto* r = series.find(d)) {
      window.push_back(*r);
    } else {
      missing.push_back(d.iso());
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw GapError("weather window ending " + target.iso() + " is missing " + std::to_string(missing.size()) +
                   " day(s): " + list);
  }
  return window;
}

std::vector<double> window_matrix(std::span<const WeatherRecord> window) {
  std::vector<double> m;
  m.reserve(window.size() * kWeatherFields);
  for (const auto& r : window) {
    const auto row = r.row();
    m.insert(m.end(), row.begin(), row.end());
  }
  return m;
}

ImputedSeries impute_modis(const WeatherSeries& series, double fallback_snow, double fallback_albedo,
                           long max_lookback_days) {
  auto records = series.records();
  ImputedSeries out;
  out.snow_valid.resize(records.size());
  out.albedo_valid.resize(records.size());

  auto fill = [&](auto member, double fallback, std::vector<std::uint8_t>& valid) {
    std::optional<double> last;
    Date last_date;
    for (std::size_t i = 0; i < records.size(); ++i) {
      auto& v = records[i].*member;
      valid[i] = v.has_value();
      if (v) {
        last = v;
        last_date = records[i].date;
        continue;
      }
      v = (last && records[i].date - last_date <= max_lookback_days) ? *last : fallback;
    }
  };
  fill(&WeatherRecord::snow_cover, fallback_snow, out.snow_valid);
  fill(&WeatherRecord::albedo, fallback_albedo, out.albedo_valid);
  out.series = WeatherSeries(std::move(records));
  return out;
}

}  // namespace snowfuse::features
