#include <algorithm>
#include <cmath>
#include <limits>

#include "snowfuse/error.hpp"
#include "snowfuse/eval.hpp"
#include "snowfuse/text.hpp"

namespace snowfuse::eval {

namespace {

struct SquaredError {
  double sse = 0.0;
  std::size_t n = 0;
};

void accumulate(const Raster& pred, const Raster& truth, const BasinMask& mask, SquaredError& acc) {
  raster::require_same_grid(pred.spec(), truth.spec(), "rmse: prediction vs truth");
  raster::require_same_grid(truth.spec(), mask.spec(), "rmse: truth vs mask '" + mask.name() + "'");
  if (pred.bands() != 1 || truth.bands() != 1) throw ArgumentError("rmse: single-band rasters required");
  for (std::size_t r = 0; r < truth.rows(); ++r) {
    for (std::size_t c = 0; c < truth.cols(); ++c) {
      if (!mask.contains(r, c) || pred.is_nodata(r, c) || truth.is_nodata(r, c)) continue;
      const double p = std::max(0.0, static_cast<double>(pred.at(r, c)));
      const double t = std::max(0.0, static_cast<double>(truth.at(r, c)));
      acc.sse += (p - t) * (p - t);
      ++acc.n;
    }
  }
}

double finish(const SquaredError& acc, const BasinMask& mask) {
  if (acc.n == 0) throw EmptyEvaluationError("rmse: no cell of basin '" + mask.name() + "' is valid in both rasters");
  return std::sqrt(acc.sse / static_cast<double>(acc.n));
}

Raster constant_like(const Raster& truth, double v) {
  Raster out(truth.spec(), 1);
  for (auto& x : out.values()) x = static_cast<float>(v);
  return out;
}

}  // namespace

double rmse(const Raster& pred, const Raster& truth, const BasinMask& mask) {
  SquaredError acc;
  accumulate(pred, truth, mask, acc);
  return finish(acc, mask);
}

double rmse_pooled(std::span<const ScoredPair> pairs, const BasinMask& mask) {
  SquaredError acc;
  for (const auto& p : pairs) accumulate(*p.pred, *p.truth, mask, acc);
  return finish(acc, mask);
}

double area_weighted_overall(std::span<const AreaRmse> rows) {
  if (rows.empty()) throw ArgumentError("area_weighted_overall: no rows");
  double num = 0.0, den = 0.0;
  for (const auto& r : rows) {
    if (!(r.area_km2 > 0.0)) throw ArgumentError("area_weighted_overall: areas must be positive");
    num += r.area_km2 * r.rmse;
    den += r.area_km2;
  }
  return num / den;
}

double baseline_zero(const Raster& truth, const BasinMask& mask) { return rmse(constant_like(truth, 0.0), truth, mask); }

double baseline_mean(double train_mean, const Raster& truth, const BasinMask& mask) {
  return rmse(constant_like(truth, train_mean), truth, mask);
}

// -------------------------------------------------------------- stations

void StationSet::add(Station s) {
  auto it = std::lower_bound(stations_.begin(), stations_.end(), s.id,
                             [](const Station& a, long long id) { return a.id < id; });
  if (it != stations_.end() && it->id == s.id) throw ArgumentError("station id " + std::to_string(s.id) + " is duplicated");
  stations_.insert(it, std::move(s));
}

Station& StationSet::get(long long id) {
  for (auto& s : stations_) {
    if (s.id == id) return s;
  }
  throw ArgumentError("unknown station id " + std::to_string(id));
}

std::vector<const Station*> StationSet::reporting(Date d) const {
  std::vector<const Station*> out;
  for (const auto& s : stations_) {
    if (s.swe_by_date.count(d)) out.push_back(&s);
  }
  return out;
}

std::string format_stations_csv(const StationSet& set) {
  std::string s = std::string(kStationCsvHeader) + "\n";
  for (const auto& st : set.stations()) {
    const std::string head = std::to_string(st.id) + "," + text::format_double(st.x) + "," + text::format_double(st.y) +
                             "," + text::format_double(st.elevation) + ",";
    if (st.swe_by_date.empty()) s += head + ",\n";
    for (const auto& [d, v] : st.swe_by_date) s += head + d.iso() + "," + text::format_double(v) + "\n";
  }
  return s;
}

StationSet parse_stations_csv(const std::vector<std::string>& lines, const std::string& source) {
  if (lines.empty() || text::trim(lines[0]) != kStationCsvHeader) {
    throw ParseError(source + ": expected header '" + kStationCsvHeader + "'");
  }
  std::map<long long, Station> by_id;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    const std::string where = source + " line " + std::to_string(i + 1);
    const auto f = text::split(lines[i], ',');
    if (f.size() != 6) throw ParseError(where + ": expected 6 fields");
    try {
      const long long id = text::parse_int(f[0], "id");
      Station st{id, text::parse_double(f[1], "x"), text::parse_double(f[2], "y"), text::parse_double(f[3], "elevation"),
                 {}};
      auto [it, fresh] = by_id.emplace(id, st);
      if (!fresh && (it->second.x != st.x || it->second.y != st.y || it->second.elevation != st.elevation)) {
        throw ParseError("station " + std::to_string(id) + " changes location");
      }
      const auto date = text::trim(f[4]);
      const auto swe = text::trim(f[5]);
      if (date.empty() != swe.empty()) throw ParseError("date and swe must both be present or both empty");
      if (!date.empty()) {
        const auto d = Date::parse(std::string(date));
        if (!it->second.swe_by_date.emplace(d, text::parse_double(swe, "swe")).second) {
          throw ParseError("station " + std::to_string(id) + " has two readings on " + d.iso());
        }
      }
    } catch (const ParseError& e) {
      throw ParseError(where + ": " + e.what());
    } catch (const ArgumentError& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  StationSet set;
  for (auto& [id, st] : by_id) set.add(std::move(st));
  return set;
}

StationSet read_stations_csv(const std::filesystem::path& path) {
  return parse_stations_csv(text::read_lines(path), path.string());
}

void write_stations_csv(const StationSet& set, const std::filesystem::path& path) {
  text::write_file(path, format_stations_csv(set));
}

Raster nearest_station_field(const StationSet& stations, Date d, const GridSpec& grid) {
  const auto rep = stations.reporting(d);
  if (rep.empty()) throw NoDataError("no station reports SWE on " + d.iso());
  Raster out(grid, 1);
  for (std::size_t r = 0; r < grid.rows; ++r) {
    const double y = grid.cell_center_y(r);
    for (std::size_t c = 0; c < grid.cols; ++c) {
      const double x = grid.cell_center_x(c);
      const Station* best = nullptr;
      double best_d2 = std::numeric_limits<double>::infinity();
      for (const auto* s : rep) {  // id order, so strict < keeps the lowest id on ties
        const double d2 = (s->x - x) * (s->x - x) + (s->y - y) * (s->y - y);
        if (d2 < best_d2) {
          best_d2 = d2;
          best = s;
        }
      }
      out.set(r, c, static_cast<float>(best->swe_by_date.at(d)));
    }
  }
  return out;
}

double baseline_nearest_station(const StationSet& stations, Date d, const Raster& truth, const BasinMask& mask) {
  return rmse(nearest_station_field(stations, d, truth.spec()), truth, mask);
}

}  // namespace snowfuse::eval
