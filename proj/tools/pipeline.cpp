#include "pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <thread>

#include "snowfuse/error.hpp"
#include "snowfuse/kv_config.hpp"
#include "snowfuse/text.hpp"

namespace snowfuse::pipeline {

namespace {

std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, pattern, v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&') {
      out += "&amp;";
    } else if (c == '<') {
      out += "&lt;";
    } else if (c == '>') {
      out += "&gt;";
    } else {
      out += c;
    }
  }
  return out;
}

raster::Raster empty_like(const raster::GridSpec& g) {
  raster::Raster r(g, 1);
  for (std::size_t row = 0; row < g.rows; ++row) {
    for (std::size_t col = 0; col < g.cols; ++col) r.set_nodata(row, col);
  }
  return r;
}

const raster::BasinMask& mask_for(const std::map<std::string, raster::BasinMask>& masks, const std::string& basin) {
  auto it = masks.find(basin);
  if (it == masks.end()) throw IoError("no mask for basin '" + basin + "'");
  return it->second;
}

/// Nice round tick step covering `span` in about five intervals.
double tick_step(double span) {
  if (!(span > 0.0)) return 1.0;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= m * mag) return m * mag;
  }
  return 10.0 * mag;
}

}  // namespace

std::size_t thread_count() {
  const char* env = std::getenv("SNOWFUSE_THREADS");
  if (!env || !*env) return 1;
  try {
    const auto n = kv::parse_size("SNOWFUSE_THREADS", env);
    if (n == 0) throw ConfigError("SNOWFUSE_THREADS must be at least 1");
    return n;
  } catch (const ConfigError&) {
    throw ConfigError(std::string("SNOWFUSE_THREADS: expected a positive integer, got '") + env + "'");
  }
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(threads, n); ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::map<std::string, raster::BasinMask> load_masks(const std::filesystem::path& manifest) {
  const auto dir = manifest.parent_path();
  std::map<std::string, raster::BasinMask> out;
  for (const auto& row : train::read_manifest(manifest)) {
    if (out.count(row.basin)) continue;
    out.emplace(row.basin, raster::read_basin_mask(train::mask_path(dir, row.basin), row.basin));
  }
  return out;
}

std::string item_file(const std::string& basin, Date d) {
  std::string s = basin;
  std::replace(s.begin(), s.end(), ' ', '_');
  return s + "_" + d.iso() + ".rstr";
}

std::vector<PredictionItem> predict_items(const model::FusionModel& model, const train::Dataset& data,
                                          const std::map<std::string, raster::BasinMask>& masks,
                                          std::optional<train::Split> split, std::size_t threads) {
  std::vector<std::pair<std::string, Date>> keys;
  std::vector<std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    if (split && data.splits[i] != *split) continue;
    const auto& s = data.samples[i];
    const std::pair<std::string, Date> key{s.basin, s.date};
    auto it = std::find(keys.begin(), keys.end(), key);
    if (it == keys.end()) {
      keys.push_back(key);
      members.emplace_back();
      it = keys.end() - 1;
    }
    members[static_cast<std::size_t>(it - keys.begin())].push_back(i);
  }
  std::vector<PredictionItem> items(keys.size());
  parallel_for(keys.size(), threads, [&](std::size_t k) {
    const auto& g = mask_for(masks, keys[k].first).spec();
    PredictionItem item{keys[k].first, keys[k].second, empty_like(g), empty_like(g)};
    for (auto i : members[k]) {
      const auto& s = data.samples[i];
      item.pred.set(s.row, s.col, static_cast<float>(model.predict(s)));
      item.pred.set_nodata(s.row, s.col, false);
      item.truth.set(s.row, s.col, static_cast<float>(s.target_swe));
      item.truth.set_nodata(s.row, s.col, false);
    }
    items[k] = std::move(item);
  });
  return items;
}

double train_mean(const train::Dataset& data) {
  double s = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < data.samples.size(); ++i) {
    if (data.splits[i] != train::Split::Train) continue;
    s += data.samples[i].target_swe;
    ++n;
  }
  if (n == 0) throw EmptyEvaluationError("train_mean: the training split is empty");
  return s / static_cast<double>(n);
}

eval::EvalReport score_items(const std::vector<PredictionItem>& items,
                             const std::map<std::string, raster::BasinMask>& masks,
                             const eval::BaselineInputs& baselines) {
  std::vector<eval::BasinEvaluation> basins;
  auto find = [&](const std::string& name) {
    return std::find_if(basins.begin(), basins.end(), [&](const auto& b) { return b.mask.name() == name; });
  };
  for (const auto& it : items) {
    auto b = find(it.basin);
    if (b == basins.end()) {
      basins.push_back({mask_for(masks, it.basin), {}, {}, {}});
      b = basins.end() - 1;
    }
    b->dates.push_back(it.date);
    b->predictions.push_back(it.pred);
    b->truths.push_back(it.truth);
  }
  for (const auto& [name, mask] : masks) {
    if (find(name) == basins.end()) basins.push_back({mask, {}, {}, {}});
  }
  return eval::build_report(basins, baselines);
}

ErrorPoints error_points(const std::vector<PredictionItem>& items,
                         const std::map<std::string, raster::BasinMask>& masks) {
  ErrorPoints p;
  for (const auto& it : items) {
    const auto& m = mask_for(masks, it.basin);
    for (std::size_t r = 0; r < it.pred.rows(); ++r) {
      for (std::size_t c = 0; c < it.pred.cols(); ++c) {
        if (!m.contains(r, c) || it.pred.is_nodata(r, c) || it.truth.is_nodata(r, c)) continue;
        const double t = it.truth.at(r, c);
        p.truth.push_back(t);
        p.error.push_back(std::max(0.0, static_cast<double>(it.pred.at(r, c))) - t);
      }
    }
  }
  return p;
}

std::string format_points_csv(const ErrorPoints& p) {
  std::string s = "truth,error\n";
  for (std::size_t i = 0; i < p.truth.size(); ++i) {
    s += text::format_double(p.truth[i]) + "," + text::format_double(p.error[i]) + "\n";
  }
  return s;
}

ErrorPoints parse_points_csv(const std::vector<std::string>& lines, const std::string& source) {
  if (lines.empty() || text::trim(lines[0]) != "truth,error") throw ParseError(source + ": expected header 'truth,error'");
  ErrorPoints p;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (text::trim(lines[i]).empty()) continue;
    const auto f = text::split(lines[i], ',');
    if (f.size() != 2) throw ParseError(source + " line " + std::to_string(i + 1) + ": expected 2 fields");
    p.truth.push_back(text::parse_double(f[0], "truth"));
    p.error.push_back(text::parse_double(f[1], "error"));
  }
  return p;
}

std::vector<AblationRow> run_ablation(const train::Dataset& data, const std::map<std::string, raster::BasinMask>& masks,
                                      const model::FusionConfig& model_cfg, const train::TrainConfig& train_cfg,
                                      const std::vector<std::uint64_t>& seeds, std::size_t threads) {
  if (seeds.empty()) throw ConfigError("ablate: no seeds given");
  std::vector<AblationRow> rows;
  std::vector<model::FusionConfig> cfgs;
  for (auto s : model::kAllSources) {
    cfgs.push_back(model::single_source_config(model_cfg, s));
    std::string enc = "lstm";
    if (s == model::Source::Terrain) enc = "depthwise-cnn";
    if (s == model::Source::Sar || s == model::Source::Spectral) enc = "cnn";
    if (s == model::Source::Modis && model_cfg.modis_placement == model::ModisPlacement::PostFusion) enc = "mlp";
    rows.push_back({model::source_name(s), enc, std::vector<double>(seeds.size()), 0.0});
  }
  cfgs.push_back(model_cfg);
  rows.push_back({"all", "fusion", std::vector<double>(seeds.size()), 0.0});

  const std::size_t jobs = cfgs.size() * seeds.size();
  parallel_for(jobs, threads, [&](std::size_t j) {
    const std::size_t m = j % cfgs.size(), s = j / cfgs.size();
    auto tc = train_cfg;
    tc.seed = seeds[s];
    const auto result = train::train_model(data, cfgs[m], tc);
    const auto items = predict_items(result.best, data, masks, train::Split::Test, 1);
    rows[m].rmse[s] = score_items(items, masks).overall_rmse;
  });
  for (auto& r : rows) {
    double sum = 0.0;
    for (double v : r.rmse) sum += v;
    r.mean = sum / static_cast<double>(r.rmse.size());
  }
  return rows;
}

std::string format_ablation_csv(const std::vector<AblationRow>& rows, const std::vector<std::uint64_t>& seeds) {
  std::string s = "source,model,rmse";
  for (auto seed : seeds) s += ",rmse_seed_" + std::to_string(seed);
  s += "\n";
  for (const auto& r : rows) {
    s += r.source + "," + r.encoder + "," + text::format_double(r.mean);
    for (double v : r.rmse) s += "," + text::format_double(v);
    s += "\n";
  }
  return s;
}

std::string rmse_bars_svg(const eval::EvalReport& report) {
  std::vector<std::pair<std::string, double>> bars;
  for (const auto& r : report.rows) bars.emplace_back(r.basin, r.rmse);
  bars.emplace_back("Overall", report.overall_rmse);
  if (report.zero_pred) bars.emplace_back("Zero Pred", *report.zero_pred);
  if (report.mean_pred) bars.emplace_back("Mean Pred", *report.mean_pred);
  if (report.snotel) bars.emplace_back("SNOTEL", *report.snotel);

  const double left = 120, top = 40, bar_h = 22, gap = 8, plot_w = 440;
  double vmax = 0.0;
  for (const auto& [n, v] : bars) vmax = std::max(vmax, v);
  const double step = tick_step(vmax);
  const double axis_max = std::max(step, std::ceil(vmax / step) * step);
  const double height = top + static_cast<double>(bars.size()) * (bar_h + gap) + 50;

  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"" + fmt("%.0f", height) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">RMSE by basin "
       "(inches)</text>\n";
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const double y = top + static_cast<double>(i) * (bar_h + gap);
    const double w = plot_w * bars[i].second / axis_max;
    const bool summary = i >= report.rows.size();
    s += "<text x=\"" + fmt("%.1f", left - 6) + "\" y=\"" + fmt("%.1f", y + bar_h * 0.7) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" + xml_escape(bars[i].first) + "</text>\n";
    s += "<rect x=\"" + fmt("%.1f", left) + "\" y=\"" + fmt("%.1f", y) + "\" width=\"" + fmt("%.2f", w) +
         "\" height=\"" + fmt("%.1f", bar_h) + "\" fill=\"" + (summary ? "#888888" : "#3b6ea8") + "\"/>\n";
    s += "<text x=\"" + fmt("%.1f", left + w + 4) + "\" y=\"" + fmt("%.1f", y + bar_h * 0.7) +
         "\" font-family=\"sans-serif\" font-size=\"11\">" + fmt("%.1f", bars[i].second) + "</text>\n";
  }
  const double axis_y = top + static_cast<double>(bars.size()) * (bar_h + gap);
  s += "<line x1=\"" + fmt("%.1f", left) + "\" y1=\"" + fmt("%.1f", axis_y) + "\" x2=\"" + fmt("%.1f", left + plot_w) +
       "\" y2=\"" + fmt("%.1f", axis_y) + "\" stroke=\"black\"/>\n";
  for (double t = 0.0; t <= axis_max + 1e-9; t += step) {
    const double x = left + plot_w * t / axis_max;
    s += "<line x1=\"" + fmt("%.1f", x) + "\" y1=\"" + fmt("%.1f", axis_y) + "\" x2=\"" + fmt("%.1f", x) + "\" y2=\"" +
         fmt("%.1f", axis_y + 4) + "\" stroke=\"black\"/>\n";
    s += "<text x=\"" + fmt("%.1f", x) + "\" y=\"" + fmt("%.1f", axis_y + 16) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + fmt("%g", t) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

std::string error_scatter_svg(const ErrorPoints& points, const std::vector<eval::CurvePoint>& curve) {
  const double left = 60, top = 30, w = 520, h = 320;
  double xmin = 0.0, xmax = 1.0, ymin = -1.0, ymax = 1.0;
  if (!points.truth.empty()) {
    xmin = *std::min_element(points.truth.begin(), points.truth.end());
    xmax = *std::max_element(points.truth.begin(), points.truth.end());
    ymin = *std::min_element(points.error.begin(), points.error.end());
    ymax = *std::max_element(points.error.begin(), points.error.end());
  }
  for (const auto& p : curve) ymin = std::min(ymin, p.fitted), ymax = std::max(ymax, p.fitted);
  if (!(xmax > xmin)) xmax = xmin + 1.0;
  if (!(ymax > ymin)) ymax = ymin + 1.0;
  const double xs = tick_step(xmax - xmin), ys = tick_step(ymax - ymin);
  xmin = std::floor(xmin / xs) * xs, xmax = std::ceil(xmax / xs) * xs;
  ymin = std::floor(ymin / ys) * ys, ymax = std::ceil(ymax / ys) * ys;
  auto px = [&](double x) { return left + w * (x - xmin) / (xmax - xmin); };
  auto py = [&](double y) { return top + h * (ymax - y) / (ymax - ymin); };

  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<rect x=\"" + fmt("%.1f", left) + "\" y=\"" + fmt("%.1f", top) + "\" width=\"" + fmt("%.1f", w) +
       "\" height=\"" + fmt("%.1f", h) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t = xmin; t <= xmax + 1e-9 * xs; t += xs) {
    s += "<text x=\"" + fmt("%.1f", px(t)) + "\" y=\"" + fmt("%.1f", top + h + 16) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + fmt("%g", t) + "</text>\n";
  }
  for (double t = ymin; t <= ymax + 1e-9 * ys; t += ys) {
    s += "<text x=\"" + fmt("%.1f", left - 6) + "\" y=\"" + fmt("%.1f", py(t) + 4) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + fmt("%g", t) + "</text>\n";
  }
  if (ymin < 0.0 && ymax > 0.0) {
    s += "<line x1=\"" + fmt("%.1f", left) + "\" y1=\"" + fmt("%.2f", py(0.0)) + "\" x2=\"" + fmt("%.1f", left + w) +
         "\" y2=\"" + fmt("%.2f", py(0.0)) + "\" stroke=\"#999999\" stroke-dasharray=\"4 3\"/>\n";
  }
  // at most 5000 dots, taken at a fixed stride
  const std::size_t n = points.truth.size(), stride = n > 5000 ? (n + 4999) / 5000 : 1;
  for (std::size_t i = 0; i < n; i += stride) {
    s += "<circle cx=\"" + fmt("%.2f", px(points.truth[i])) + "\" cy=\"" + fmt("%.2f", py(points.error[i])) +
         "\" r=\"1.5\" fill=\"#3b6ea8\" fill-opacity=\"0.4\"/>\n";
  }
  if (!curve.empty()) {
    s += "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < curve.size(); ++i) {
      if (i) s += " ";
      s += fmt("%.2f", px(curve[i].x)) + "," + fmt("%.2f", py(curve[i].fitted));
    }
    s += "\"/>\n";
  }
  s += "<text x=\"" + fmt("%.1f", left + w / 2) + "\" y=\"392\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"12\">Ground truth SWE (inches)</text>\n";
  s += "<text x=\"14\" y=\"" + fmt("%.1f", top + h / 2) + "\" transform=\"rotate(-90 14 " + fmt("%.1f", top + h / 2) +
       ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">Prediction error (inches)</text>\n";
  s += "</svg>\n";
  return s;
}

}  // namespace snowfuse::pipeline
