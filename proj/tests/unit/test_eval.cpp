#include <cmath>
#include <numeric>

#include "doctest.h"
#include "snowfuse/error.hpp"
#include "snowfuse/eval.hpp"
#include "support/eval_oracles.hpp"
#include "support/oracles.hpp"

using namespace snowfuse;
using eval::AreaRmse;
using raster::BasinMask;
using raster::GridSpec;
using raster::Raster;

namespace {

GridSpec grid(std::size_t rows, std::size_t cols, double cell = 1000.0, double x0 = 300000.0, double y0 = 4100000.0) {
  return GridSpec{x0, y0, cell, rows, cols, "EPSG:32611"};
}

BasinMask full_mask(const GridSpec& g, const std::string& name = "Test") {
  return BasinMask(g, std::vector<std::uint8_t>(g.rows * g.cols, 1), name);
}

Raster filled(const GridSpec& g, std::initializer_list<float> v) {
  Raster r(g, 1);
  std::copy(v.begin(), v.end(), r.values().begin());
  return r;
}

eval::Station station(long long id, double x, double y, Date d, double swe) {
  eval::Station s;
  s.id = id;
  s.x = x;
  s.y = y;
  s.swe_by_date[d] = swe;
  return s;
}

}  // namespace

TEST_CASE("rmse examples") {
  const auto g = grid(1, 2);
  const auto m = full_mask(g);
  const auto truth = filled(g, {3, 4});
  CHECK(eval::rmse(truth, truth, m) == 0.0);
  CHECK(eval::rmse(filled(g, {0, 0}), truth, m) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-15));
  // negative predictions are scored as 0
  CHECK(eval::rmse(filled(g, {-2, -7}), truth, m) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-15));

  Raster nd = truth;
  nd.set_nodata(0, 0);
  nd.set_nodata(0, 1);
  CHECK_THROWS_AS(eval::rmse(truth, nd, m), EmptyEvaluationError);
  CHECK_THROWS_AS(eval::rmse(filled(grid(2, 1), {0, 0}), truth, m), GridMismatchError);
}

TEST_CASE("rmse matches the flat-loop oracle and is symmetric") {
  nn::SeededRng rng(21);
  for (int t = 0; t < 200; ++t) {
    const std::size_t rows = 1 + rng.index(12), cols = 1 + rng.index(12);
    auto pred = testing::random_raster(rng, rows, cols, 1, 0.2, 1000.0);
    auto truth = pred;
    const auto t2 = testing::random_raster(rng, rows, cols, 1, 0.2, 1000.0);
    for (std::size_t i = 0; i < truth.pixel_count(); ++i) {
      truth.values()[i] = t2.values()[i];
      truth.set_nodata(i / cols, i % cols, t2.nodata_mask()[i] != 0);
    }
    const auto mask = testing::random_mask(rng, pred.spec(), 0.7);
    const double want = testing::rmse_oracle(pred, truth, mask);
    if (std::isnan(want)) {
      CHECK_THROWS_AS(eval::rmse(pred, truth, mask), EmptyEvaluationError);
      continue;
    }
    CHECK(std::abs(eval::rmse(pred, truth, mask) - want) <= 1e-12 * std::max(1.0, want));
    CHECK(eval::rmse(pred, truth, mask) == eval::rmse(truth, pred, mask));
  }
}

TEST_CASE("pooled rmse over dates") {
  const auto g = grid(1, 2);
  const auto m = full_mask(g);
  const auto a = filled(g, {1, 1}), b = filled(g, {1, 4}), zero = filled(g, {0, 0});
  std::vector<eval::ScoredPair> pairs{{&zero, &a}, {&zero, &b}};
  CHECK(eval::rmse_pooled(pairs, m) == doctest::Approx(std::sqrt((1 + 1 + 1 + 16) / 4.0)).epsilon(1e-15));
}

TEST_CASE("area-weighted overall") {
  const std::vector<AreaRmse> table{{8.4, 2.7}, {2.2, 7.0}, {2.9, 9.4},  {1.5, 7.3}, {2.9, 9.5},
                                    {1.7, 5.8}, {4.2, 7.6}, {3.5, 17.5}, {1.5, 5.1}};
  const double overall = eval::area_weighted_overall(table);
  CHECK(std::abs(overall - 7.45) < 0.01);
  const std::vector<AreaRmse> equal{{2, 1}, {2, 3}, {2, 8}};
  CHECK(eval::area_weighted_overall(equal) == doctest::Approx(4.0).epsilon(1e-15));
  const std::vector<AreaRmse> one{{3.3, 6.1}};
  CHECK(eval::area_weighted_overall(one) == doctest::Approx(6.1).epsilon(1e-15));
  CHECK_THROWS_AS(eval::area_weighted_overall(std::vector<AreaRmse>{}), ArgumentError);
  const std::vector<AreaRmse> bad{{0.0, 1.0}};
  CHECK_THROWS_AS(eval::area_weighted_overall(bad), ArgumentError);

  nn::SeededRng rng(22);
  for (int t = 0; t < 100; ++t) {
    std::vector<AreaRmse> rows(1 + rng.index(10));
    for (auto& r : rows) r = {rng.uniform(0.1, 10.0), rng.uniform(0.0, 20.0)};
    const double o = eval::area_weighted_overall(rows);
    double lo = 1e300, hi = -1e300;
    for (const auto& r : rows) lo = std::min(lo, r.rmse), hi = std::max(hi, r.rmse);
    CHECK(o >= lo - 1e-12);
    CHECK(o <= hi + 1e-12);
  }
}

TEST_CASE("zero and mean baselines") {
  nn::SeededRng rng(23);
  const auto g = grid(6, 7);
  const auto m = full_mask(g);
  CHECK(eval::baseline_zero(Raster(g, 1), m) == 0.0);
  for (int t = 0; t < 50; ++t) {
    Raster truth(g, 1);
    double sq = 0.0;
    for (auto& v : truth.values()) {
      v = static_cast<float>(rng.uniform(0.0, 30.0));
      sq += static_cast<double>(v) * v;
    }
    CHECK(std::abs(eval::baseline_zero(truth, m) - std::sqrt(sq / 42.0)) < 1e-9);
  }
  Raster flat(g, 1);
  for (auto& v : flat.values()) v = 4.25f;
  CHECK(eval::baseline_mean(4.25, flat, m) == 0.0);
}

TEST_CASE("nearest-station baseline") {
  const Date d(2022, 3, 20);
  SUBCASE("tie goes to the lowest id") {
    const auto g = grid(1, 1, 1000.0, 0.0, 1000.0);  // single cell centred at (500, 500)
    eval::StationSet s;
    s.add(station(2, 1000.0, 500.0, d, 9.0));
    s.add(station(1, 0.0, 500.0, d, 5.0));
    CHECK(eval::nearest_station_field(s, d, g).at(0, 0) == 5.0f);
  }
  SUBCASE("a single station gives a constant field") {
    const auto g = grid(5, 4);
    eval::StationSet s;
    s.add(station(7, 0.0, 0.0, d, 3.5));
    const auto f = eval::nearest_station_field(s, d, g);
    for (auto v : f.values()) CHECK(v == 3.5f);
  }
  SUBCASE("only stations reporting on the date count") {
    const auto g = grid(2, 2);
    eval::StationSet s;
    s.add(station(1, 300500.0, 4099500.0, Date(2022, 3, 21), 1.0));
    s.add(station(2, 0.0, 0.0, d, 2.0));
    const auto f = eval::nearest_station_field(s, d, g);
    for (auto v : f.values()) CHECK(v == 2.0f);
    CHECK_THROWS_AS(eval::nearest_station_field(s, Date(2016, 1, 1), g), NoDataError);
    CHECK_THROWS_AS(s.add(station(1, 0, 0, d, 0)), ArgumentError);
  }
  SUBCASE("assignment equals the all-pairs oracle") {
    nn::SeededRng rng(24);
    for (int t = 0; t < 100; ++t) {
      const auto g = grid(1 + rng.index(15), 1 + rng.index(15), 1000.0, rng.uniform(0, 1e5), rng.uniform(1e5, 2e5));
      eval::StationSet set;
      std::vector<eval::Station> raw;
      const std::size_t n = 1 + rng.index(12);
      for (std::size_t i = 0; i < n; ++i) {
        auto s = station(static_cast<long long>(rng.index(1000000)), g.origin_x + rng.uniform(-3000, 18000),
                         g.origin_y - rng.uniform(-3000, 18000), d, static_cast<double>(i));
        if (rng.uniform() < 0.3) s.swe_by_date = {{Date(2022, 4, 10), 1.0}};
        bool dup = false;
        for (const auto& r : raw) dup = dup || r.id == s.id;
        if (dup) continue;
        raw.push_back(s);
        set.add(s);
      }
      const auto want = testing::nearest_oracle(raw, d, g);
      if (want[0] < 0) {
        CHECK_THROWS_AS(eval::nearest_station_field(set, d, g), NoDataError);
        continue;
      }
      const auto field = eval::nearest_station_field(set, d, g);
      bool ok = true;
      for (std::size_t i = 0; i < want.size(); ++i) {
        const auto& st = *std::find_if(raw.begin(), raw.end(), [&](const auto& s) { return s.id == want[i]; });
        ok = ok && field.values()[i] == static_cast<float>(st.swe_by_date.at(d));
      }
      CHECK(ok);
    }
  }
  SUBCASE("translation invariance") {
    nn::SeededRng rng(25);
    for (int t = 0; t < 20; ++t) {
      const auto g = grid(8, 8);
      Raster truth(g, 1);
      for (auto& v : truth.values()) v = static_cast<float>(rng.uniform(0, 20));
      eval::StationSet a, b;
      const double dx = rng.uniform(-5e4, 5e4), dy = rng.uniform(-5e4, 5e4);
      for (long long i = 1; i <= 5; ++i) {
        const double x = g.origin_x + rng.uniform(0, 8000), y = g.origin_y - rng.uniform(0, 8000);
        const double swe = rng.uniform(0, 20);
        a.add(station(i, x, y, d, swe));
        b.add(station(i, x + dx, y + dy, d, swe));
      }
      auto g2 = g;
      g2.origin_x += dx;
      g2.origin_y += dy;
      Raster truth2(g2, 1, std::vector<float>(truth.values().begin(), truth.values().end()),
                    std::vector<std::uint8_t>(truth.pixel_count(), 0));
      CHECK(eval::baseline_nearest_station(a, d, truth, full_mask(g)) ==
            doctest::Approx(eval::baseline_nearest_station(b, d, truth2, full_mask(g2))).epsilon(1e-12));
    }
  }
}

TEST_CASE("station CSV roundtrip") {
  eval::StationSet s;
  auto a = station(3, 1.5, 2.25, Date(2017, 3, 1), 4.5);
  a.swe_by_date[Date(2017, 3, 20)] = 0.1;
  a.elevation = 2500.0;
  s.add(a);
  eval::Station silent;
  silent.id = 9;
  s.add(silent);
  const auto back = eval::parse_stations_csv(testing::lines_of(eval::format_stations_csv(s)), "mem");
  REQUIRE(back.stations().size() == 2);
  CHECK(back.stations()[0].swe_by_date == a.swe_by_date);
  CHECK(back.stations()[0].elevation == 2500.0);
  CHECK(back.stations()[1].swe_by_date.empty());
  CHECK(eval::format_stations_csv(back) == eval::format_stations_csv(s));
}

TEST_CASE("gaussian kernel") {
  for (double sigma : {0.3, 1.0, 2.5}) {
    const auto k = eval::gaussian_kernel(sigma);
    const auto want = testing::kernel_oracle(sigma);
    REQUIRE(k.size() == want.size());
    for (std::size_t i = 0; i < k.size(); ++i) CHECK(std::abs(k[i] - want[i]) < 1e-15);
    CHECK(std::accumulate(k.begin(), k.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));
  }
  CHECK_THROWS_AS(eval::gaussian_kernel(0.0), ArgumentError);
  CHECK_THROWS_AS(eval::gaussian_kernel(-1.0), ArgumentError);
}

TEST_CASE("gaussian smoothing") {
  nn::SeededRng rng(26);
  SUBCASE("constant fields stay constant") {
    for (double sigma : {0.5, 1.0, 3.0}) {
      Raster r(grid(9, 13), 1);
      for (auto& v : r.values()) v = 6.5f;
      r.set_nodata(4, 4);
      const auto out = eval::gaussian_smooth_values(r, sigma);
      for (std::size_t i = 0; i < out.size(); ++i) {
        if (i == 4 * 13 + 4) {
          CHECK(std::isnan(out[i]));
        } else {
          CHECK(std::abs(out[i] - 6.5) < 1e-12);
        }
      }
    }
  }
  SUBCASE("impulse response is the kernel") {
    Raster r(grid(21, 21), 1);
    r.set(10, 10, 1.0f);
    const auto out = eval::gaussian_smooth_values(r, 1.0);
    const auto k = testing::kernel_oracle(1.0);
    const long rad = static_cast<long>(k.size() / 2);
    CHECK(std::abs(out[10 * 21 + 10] - k[rad] * k[rad]) < 1e-6);
    for (long i = -rad; i <= rad; ++i) {
      for (long j = -rad; j <= rad; ++j) {
        CHECK(std::abs(out[(10 + i) * 21 + 10 + j] - k[i + rad] * k[j + rad]) < 1e-6);
      }
    }
  }
  SUBCASE("separable pass equals the dense 2-D oracle") {
    for (int t = 0; t < 100; ++t) {
      const double sigma = rng.uniform(0.3, 3.0);
      auto r = testing::random_raster(rng, 16, 16, 1, t % 2 ? 0.15 : 0.0, 1000.0);
      const auto got = eval::gaussian_smooth_values(r, sigma);
      const auto want = testing::dense_smooth_oracle(r, sigma);
      double worst = 0.0;
      for (std::size_t i = 0; i < got.size(); ++i) {
        if (std::isnan(want[i])) {
          CHECK(std::isnan(got[i]));
          continue;
        }
        worst = std::max(worst, std::abs(got[i] - want[i]));
      }
      CHECK(worst < 1e-9);
    }
  }
  SUBCASE("output stays within the input range") {
    for (int t = 0; t < 50; ++t) {
      const auto r = testing::random_raster(rng, 12, 10, 1, 0.1, 1000.0);
      double lo = 1e300, hi = -1e300;
      for (std::size_t i = 0; i < r.pixel_count(); ++i) {
        if (r.nodata_mask()[i]) continue;
        lo = std::min(lo, static_cast<double>(r.values()[i]));
        hi = std::max(hi, static_cast<double>(r.values()[i]));
      }
      for (double v : eval::gaussian_smooth_values(r, rng.uniform(0.5, 2.0))) {
        if (std::isnan(v)) continue;
        CHECK(v >= lo - 1e-12);
        CHECK(v <= hi + 1e-12);
      }
    }
  }
  SUBCASE("periodic mode preserves the mean") {
    for (int t = 0; t < 20; ++t) {
      const auto r = testing::random_raster(rng, 20, 24, 1, 0.0, 1000.0);
      double in = 0.0, out = 0.0;
      for (auto v : r.values()) in += v;
      for (double v : eval::gaussian_smooth_values(r, 1.5, eval::SmoothBoundary::Periodic)) out += v;
      CHECK(std::abs(out - in) <= 1e-9 * std::max(1.0, std::abs(in)));
    }
  }
  SUBCASE("raster output keeps nodata and rejects bad input") {
    auto r = testing::random_raster(rng, 8, 8, 1, 0.2, 1000.0);
    const auto out = eval::gaussian_smooth(r, 1.0);
    for (std::size_t i = 0; i < r.pixel_count(); ++i) CHECK(out.nodata_mask()[i] == r.nodata_mask()[i]);
    CHECK_THROWS_AS(eval::gaussian_smooth(r, 0.0), ArgumentError);
    CHECK_THROWS_AS(eval::gaussian_smooth(testing::random_raster(rng, 4, 4, 2, 0.0), 1.0), ArgumentError);
  }
}

TEST_CASE("loess error curve") {
  nn::SeededRng rng(27);
  std::vector<double> x(200);
  for (auto& v : x) v = rng.uniform(0.0, 40.0);
  SUBCASE("linear data is reproduced exactly") {
    std::vector<double> e(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) e[i] = 0.75 - 0.3 * x[i];
    const auto curve = eval::loess_error_curve(x, e);
    REQUIRE(curve.size() == 100);
    for (const auto& p : curve) CHECK(std::abs(p.fitted - (0.75 - 0.3 * p.x)) < 1e-9);
    CHECK(curve.front().x == *std::min_element(x.begin(), x.end()));
    CHECK(curve.back().x == *std::max_element(x.begin(), x.end()));
  }
  SUBCASE("constant errors give a constant curve") {
    const std::vector<double> e(x.size(), -2.5);
    for (const auto& p : eval::loess_error_curve(x, e, 0.5, 37)) CHECK(std::abs(p.fitted + 2.5) < 1e-12);
  }
  SUBCASE("quadratic data matches the WLS oracle") {
    std::vector<double> e(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) e[i] = 0.02 * (x[i] - 15.0) * (x[i] - 15.0) - 3.0;
    for (double span : {0.3, 0.6, 1.0}) {
      for (const auto& p : eval::loess_error_curve(x, e, span)) {
        CHECK(std::abs(p.fitted - testing::wls_oracle(x, e, p.x, span)) < 1e-8);
      }
    }
  }
  SUBCASE("errors") {
    const std::vector<double> e(x.size(), 0.0);
    CHECK_THROWS_AS(eval::loess_error_curve(std::span(x).first(9), std::span(e).first(9)), ArgumentError);
    CHECK_THROWS_AS(eval::loess_error_curve(x, std::span(e).first(50)), ArgumentError);
    CHECK_THROWS_AS(eval::loess_error_curve(x, e, 0.0), ArgumentError);
    CHECK_THROWS_AS(eval::loess_error_curve(x, e, 1.5), ArgumentError);
    const std::vector<double> flat(20, 3.0), ee(20, 1.0);
    CHECK_THROWS_AS(eval::loess_error_curve(flat, ee), ArgumentError);
  }
  SUBCASE("curve CSV roundtrip") {
    std::vector<double> e(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) e[i] = std::sin(x[i]);
    const auto curve = eval::loess_error_curve(x, e);
    const auto back = eval::parse_curve_csv(testing::lines_of(eval::format_curve_csv(curve)), "mem");
    REQUIRE(back.size() == curve.size());
    for (std::size_t i = 0; i < curve.size(); ++i) {
      CHECK(back[i].x == curve[i].x);
      CHECK(back[i].fitted == curve[i].fitted);
    }
  }
}

TEST_CASE("report building and serialization") {
  const Date d1(2022, 3, 20), d2(2022, 4, 10);
  const auto g = grid(3, 3);
  std::vector<std::uint8_t> in(9, 1);
  in[0] = 0;
  const BasinMask mask(g, in, "Kings Canyon");
  Raster t1(g, 1), t2(g, 1);
  for (std::size_t i = 0; i < 9; ++i) t1.values()[i] = static_cast<float>(i), t2.values()[i] = static_cast<float>(2 * i);

  SUBCASE("perfect predictions") {
    eval::BasinEvaluation b{mask, {d1, d2}, {t1, t2}, {t1, t2}};
    const auto rep = eval::build_report({b});
    REQUIRE(rep.rows.size() == 1);
    CHECK(rep.rows[0].rmse == 0.0);
    CHECK(rep.overall_rmse == 0.0);
    CHECK(rep.rows[0].area_km2 == 8.0);
    // statistics over the 16 masked cells
    double s = 0, ss = 0;
    for (std::size_t i = 1; i < 9; ++i) s += 3.0 * i, ss += static_cast<double>(i * i) + 4.0 * i * i;
    CHECK(rep.rows[0].swe_mean == doctest::Approx(s / 16.0).epsilon(1e-14));
    CHECK(rep.rows[0].swe_std == doctest::Approx(std::sqrt(ss / 16.0 - (s / 16.0) * (s / 16.0))).epsilon(1e-12));
    CHECK(rep.zero_pred.has_value());
    CHECK_FALSE(rep.mean_pred.has_value());
    CHECK_FALSE(rep.snotel.has_value());
  }
  SUBCASE("baselines, absent basins and CSV roundtrip") {
    Raster p1 = t1, p2 = t2;
    p1.values()[4] += 3.0f;
    eval::StationSet st;
    auto s = station(1, 301500.0, 4098500.0, d1, 4.0);
    s.swe_by_date[d2] = 8.0;
    st.add(s);
    const BasinMask other(grid(2, 2, 1000.0, 500000.0), std::vector<std::uint8_t>(4, 1), "Kaweah");
    eval::BasinEvaluation b{mask, {d1, d2}, {p1, p2}, {t1, t2}};
    eval::BasinEvaluation absent{other, {}, {}, {}};
    const auto rep = eval::build_report({b, absent}, {3.0, &st});
    REQUIRE(rep.absent.size() == 1);
    CHECK(rep.absent[0].first == "Kaweah");
    CHECK(rep.absent[0].second == 4.0);
    CHECK(rep.rows[0].rmse == doctest::Approx(std::sqrt(9.0 / 16.0)).epsilon(1e-14));
    REQUIRE(rep.snotel.has_value());
    const Raster f1 = eval::nearest_station_field(st, d1, g), f2 = eval::nearest_station_field(st, d2, g);
    std::vector<eval::ScoredPair> sp{{&f1, &t1}, {&f2, &t2}};
    CHECK(*rep.snotel == doctest::Approx(eval::rmse_pooled(sp, mask)).epsilon(1e-14));

    const auto csv = eval::format_report_csv(rep);
    CHECK(csv.find("Kaweah,4,,,\n") != std::string::npos);
    const auto back = eval::parse_report_csv(testing::lines_of(csv), "mem");
    CHECK(back == rep);
    CHECK(eval::format_report_csv(back) == csv);
    const auto table = eval::format_report_table(rep);
    CHECK(table.find("Kings Canyon") != std::string::npos);
    CHECK(table.find("Overall") != std::string::npos);
  }
  SUBCASE("reserved names are rejected") {
    const BasinMask bad(g, in, "Overall");
    eval::BasinEvaluation b{bad, {d1}, {t1}, {t1}};
    CHECK_THROWS_AS(eval::build_report({b}), ArgumentError);
  }
  SUBCASE("no scored basin") {
    eval::BasinEvaluation absent{mask, {}, {}, {}};
    CHECK_THROWS_AS(eval::build_report({absent}), EmptyEvaluationError);
  }
}
