#include <cmath>
#include <cstdio>

#include "snowfuse/error.hpp"
#include "snowfuse/eval.hpp"
#include "snowfuse/text.hpp"

namespace snowfuse::eval {

namespace {

constexpr const char* kReportHeader = "basin,area_km2,swe_mean,swe_std,rmse";
constexpr const char* kOverall = "Overall";
constexpr const char* kZero = "Zero Pred";
constexpr const char* kMean = "Mean Pred";
constexpr const char* kSnotel = "SNOTEL";

bool reserved(const std::string& name) {
  return name == kOverall || name == kZero || name == kMean || name == kSnotel;
}

struct Moments {
  double sum = 0.0, sumsq = 0.0;
  std::size_t n = 0;
  void add(double v) {
    sum += v;
    sumsq += v * v;
    ++n;
  }
  double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
  double sd() const {
    if (n == 0) return 0.0;
    const double m = mean();
    return std::sqrt(std::max(0.0, sumsq / static_cast<double>(n) - m * m));
  }
};

Raster constant_field(const GridSpec& g, double v) {
  Raster out(g, 1);
  for (auto& x : out.values()) x = static_cast<float>(v);
  return out;
}

double baseline_for(const BasinEvaluation& b, const std::vector<Raster>& preds) {
  std::vector<ScoredPair> pairs;
  for (std::size_t i = 0; i < b.truths.size(); ++i) pairs.push_back({&preds[i], &b.truths[i]});
  return rmse_pooled(pairs, b.mask);
}

std::string opt(const std::optional<double>& v) { return v ? text::format_double(*v) : std::string(); }

}  // namespace

EvalReport build_report(const std::vector<BasinEvaluation>& basins, const BaselineInputs& baselines) {
  EvalReport rep;
  Moments all;
  std::vector<AreaRmse> model_rows, zero_rows, mean_rows, snotel_rows;
  for (const auto& b : basins) {
    const auto& name = b.mask.name();
    if (reserved(name) || name.find(',') != std::string::npos) {
      throw ArgumentError("basin name '" + name + "' cannot be used in a report");
    }
    if (b.truths.empty()) {
      rep.absent.emplace_back(name, b.mask.area_km2());
      continue;
    }
    if (b.predictions.size() != b.truths.size() || b.dates.size() != b.truths.size()) {
      throw ArgumentError("build_report: basin '" + name + "' has mismatched prediction/truth/date counts");
    }
    Moments m;
    for (const auto& t : b.truths) {
      raster::require_same_grid(t.spec(), b.mask.spec(), "report truth vs mask '" + name + "'");
      for (std::size_t r = 0; r < t.rows(); ++r) {
        for (std::size_t c = 0; c < t.cols(); ++c) {
          if (!b.mask.contains(r, c) || t.is_nodata(r, c)) continue;
          m.add(t.at(r, c));
          all.add(t.at(r, c));
        }
      }
    }
    const double area = b.mask.area_km2();
    const double err = baseline_for(b, b.predictions);
    rep.rows.push_back({name, area, m.mean(), m.sd(), err});
    model_rows.push_back({area, err});

    std::vector<Raster> zeros, means, nearest;
    for (std::size_t i = 0; i < b.truths.size(); ++i) {
      zeros.push_back(constant_field(b.mask.spec(), 0.0));
      if (baselines.train_mean) means.push_back(constant_field(b.mask.spec(), *baselines.train_mean));
      if (baselines.stations) nearest.push_back(nearest_station_field(*baselines.stations, b.dates[i], b.mask.spec()));
    }
    zero_rows.push_back({area, baseline_for(b, zeros)});
    if (baselines.train_mean) mean_rows.push_back({area, baseline_for(b, means)});
    if (baselines.stations) snotel_rows.push_back({area, baseline_for(b, nearest)});
  }
  if (model_rows.empty()) throw EmptyEvaluationError("build_report: no basin has truth to score against");
  for (const auto& r : model_rows) rep.overall_area_km2 += r.area_km2;
  rep.overall_swe_mean = all.mean();
  rep.overall_swe_std = all.sd();
  rep.overall_rmse = area_weighted_overall(model_rows);
  rep.zero_pred = area_weighted_overall(zero_rows);
  if (!mean_rows.empty()) rep.mean_pred = area_weighted_overall(mean_rows);
  if (!snotel_rows.empty()) rep.snotel = area_weighted_overall(snotel_rows);
  return rep;
}

std::string format_report_csv(const EvalReport& r) {
  std::string s = std::string(kReportHeader) + "\n";
  for (const auto& row : r.rows) {
    s += row.basin + "," + text::format_double(row.area_km2) + "," + text::format_double(row.swe_mean) + "," +
         text::format_double(row.swe_std) + "," + text::format_double(row.rmse) + "\n";
  }
  for (const auto& [name, area] : r.absent) s += name + "," + text::format_double(area) + ",,,\n";
  s += std::string(kOverall) + "," + text::format_double(r.overall_area_km2) + "," +
       text::format_double(r.overall_swe_mean) + "," + text::format_double(r.overall_swe_std) + "," +
       text::format_double(r.overall_rmse) + "\n";
  s += std::string(kZero) + ",,,," + opt(r.zero_pred) + "\n";
  s += std::string(kMean) + ",,,," + opt(r.mean_pred) + "\n";
  s += std::string(kSnotel) + ",,,," + opt(r.snotel) + "\n";
  return s;
}

EvalReport parse_report_csv(const std::vector<std::string>& lines, const std::string& source) {
  if (lines.empty() || text::trim(lines[0]) != kReportHeader) {
    throw ParseError(source + ": expected header '" + kReportHeader + "'");
  }
  EvalReport r;
  bool have_overall = false;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    const std::string where = source + " line " + std::to_string(i + 1);
    const auto f = text::split(lines[i], ',');
    if (f.size() != 5) throw ParseError(where + ": expected 5 fields");
    const std::string name(text::trim(f[0]));
    auto num = [&](std::size_t k, const char* what) {
      try {
        return text::parse_double(f[k], what);
      } catch (const ParseError& e) {
        throw ParseError(where + ": " + e.what());
      }
    };
    auto maybe = [&](std::size_t k, const char* what) -> std::optional<double> {
      if (text::trim(f[k]).empty()) return std::nullopt;
      return num(k, what);
    };
    if (name == kZero) {
      r.zero_pred = maybe(4, "rmse");
    } else if (name == kMean) {
      r.mean_pred = maybe(4, "rmse");
    } else if (name == kSnotel) {
      r.snotel = maybe(4, "rmse");
    } else if (name == kOverall) {
      r.overall_area_km2 = num(1, "area_km2");
      r.overall_swe_mean = num(2, "swe_mean");
      r.overall_swe_std = num(3, "swe_std");
      r.overall_rmse = num(4, "rmse");
      have_overall = true;
    } else if (text::trim(f[4]).empty()) {
      r.absent.emplace_back(name, num(1, "area_km2"));
    } else {
      r.rows.push_back({name, num(1, "area_km2"), num(2, "swe_mean"), num(3, "swe_std"), num(4, "rmse")});
    }
  }
  if (!have_overall) throw ParseError(source + ": missing Overall row");
  return r;
}

EvalReport read_report_csv(const std::filesystem::path& path) {
  return parse_report_csv(text::read_lines(path), path.string());
}

std::string format_report_table(const EvalReport& r) {
  char buf[160];
  std::string s;
  auto line = [&](const std::string& name, const std::string& area, const std::string& swe, const std::string& err) {
    std::snprintf(buf, sizeof buf, "%-14s %12s %14s %8s\n", name.c_str(), area.c_str(), swe.c_str(), err.c_str());
    s += buf;
  };
  auto f1 = [](double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.1f", v);
    return std::string(b);
  };
  line("Basin", "Area (km2)", "SWE (in.)", "RMSE");
  s += std::string(51, '-') + "\n";
  for (const auto& row : r.rows) line(row.basin, f1(row.area_km2), f1(row.swe_mean) + "+-" + f1(row.swe_std), f1(row.rmse));
  for (const auto& [name, area] : r.absent) line(name, f1(area), "absent", "-");
  s += std::string(51, '-') + "\n";
  line(kOverall, f1(r.overall_area_km2), f1(r.overall_swe_mean) + "+-" + f1(r.overall_swe_std), f1(r.overall_rmse));
  s += std::string(51, '-') + "\n";
  line(kZero, "-", "-", r.zero_pred ? f1(*r.zero_pred) : "-");
  line(kMean, "-", "-", r.mean_pred ? f1(*r.mean_pred) : "-");
  line(kSnotel, "-", "-", r.snotel ? f1(*r.snotel) : "-");
  return s;
}

}  // namespace snowfuse::eval
