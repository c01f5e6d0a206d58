#include "cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <json.hpp>
#include <set>

#include "pipeline.hpp"
#include "snowfuse/error.hpp"
#include "snowfuse/synth.hpp"
#include "snowfuse/text.hpp"

namespace snowfuse::cli {

namespace fs = std::filesystem;
using KeyDocs = std::vector<std::pair<std::string, std::string>>;

namespace {

const std::set<std::string> kSplitKeys = {"train_years", "val_years", "test_years"};

struct Common {
  std::string config_file;
  std::vector<std::string> sets;
};

std::string key_footer(const std::vector<const KeyDocs*>& groups, const std::set<std::string>* only = nullptr) {
  std::string s = "Config keys (--config FILE with key=value lines, or --set key=value):\n";
  for (const auto* g : groups) {
    for (const auto& [k, doc] : *g) {
      if (only && !only->count(k)) continue;
      char buf[256];
      std::snprintf(buf, sizeof buf, "  %-20s %s\n", k.c_str(), doc.c_str());
      s += buf;
    }
  }
  return s;
}

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_file, "key=value config file, applied before --set");
  cmd->add_option("--set", c.sets, "override one config key (repeatable)")->type_name("KEY=VALUE");
}

/// Config file entries followed by --set overrides, in application order.
kv::Entries gather(const Common& c) {
  kv::Entries e;
  if (!c.config_file.empty()) e = kv::read(c.config_file);
  for (const auto& s : c.sets) e.push_back(kv::parse_override(s));
  return e;
}

bool has_key(const KeyDocs& docs, const std::string& key) {
  for (const auto& [k, d] : docs) {
    if (k == key) return true;
  }
  return false;
}

/// Routes each entry to the model or train config; anything else is rejected.
void apply_train_entries(const kv::Entries& entries, model::FusionConfig& m, train::TrainConfig& t,
                         const std::string& command) {
  for (const auto& [k, v] : entries) {
    if (has_key(model::fusion_config_keys(), k)) {
      m.set(k, v);
    } else if (has_key(train::train_config_keys(), k)) {
      t.set(k, v);
    } else {
      throw ConfigError("unknown config key '" + k + "' for " + command);
    }
  }
}

train::SplitRule split_from(const kv::Entries& entries, const std::string& command) {
  train::TrainConfig t;
  for (const auto& [k, v] : entries) {
    if (!kSplitKeys.count(k)) throw ConfigError("unknown config key '" + k + "' for " + command);
    t.set(k, v);
  }
  t.split.validate();
  return t.split;
}

nlohmann::ordered_json kv_json(const std::string& text) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  std::vector<std::string> lines;
  std::string cur;
  for (char ch : text) {
    if (ch == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  for (const auto& [k, v] : kv::parse(lines, "config")) j[k] = v;
  return j;
}

std::string split_text(const train::SplitRule& r) {
  return "train_years=" + kv::join(r.train_years) + "\nval_years=" + kv::join(r.val_years) +
         "\ntest_years=" + kv::join(r.test_years) + "\n";
}

void log_config(std::ostream& err, const std::string& command, nlohmann::ordered_json config,
                nlohmann::ordered_json paths) {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["config"] = std::move(config);
  j["paths"] = std::move(paths);
  err << "resolved " << j.dump() << "\n";
}

std::optional<train::Split> parse_split(const std::string& s) {
  if (s == "all") return std::nullopt;
  if (s == "train") return train::Split::Train;
  if (s == "val") return train::Split::Val;
  if (s == "test") return train::Split::Test;
  throw ConfigError("unknown split '" + s + "' (expected all, train, val or test)");
}

void write_text(const fs::path& path, const std::string& s) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  text::write_file(path, s);
}

// ------------------------------------------------------------- truth loading

struct Truths {
  std::vector<pipeline::PredictionItem> items;  // pred left empty
  std::optional<double> train_mean;
};

/// Truth rasters for rows of `split` that carry ASO, plus the train-split truth mean.
Truths load_truths(const fs::path& manifest, const std::map<std::string, raster::BasinMask>& masks,
                   const train::SplitRule& rule, std::optional<train::Split> split) {
  const auto dir = manifest.parent_path();
  Truths t;
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& row : train::read_manifest(manifest)) {
    if (row.aso_path.empty()) continue;
    const auto s = rule.assign(row.date);
    const bool wanted = !split || s == *split;
    if (!wanted && s != train::Split::Train) continue;
    const auto& mask = masks.at(row.basin);
    auto truth = train::truth_inches(raster::read_raster(dir / row.aso_path), mask);
    if (s == train::Split::Train) {
      for (std::size_t r = 0; r < truth.rows(); ++r) {
        for (std::size_t c = 0; c < truth.cols(); ++c) {
          if (!mask.contains(r, c) || truth.is_nodata(r, c)) continue;
          sum += truth.at(r, c);
          ++n;
        }
      }
    }
    if (wanted) t.items.push_back({row.basin, row.date, raster::Raster(), std::move(truth)});
  }
  if (n) t.train_mean = sum / static_cast<double>(n);
  return t;
}

std::optional<eval::StationSet> load_stations(const std::string& flag, const fs::path& manifest) {
  if (flag == "none") return std::nullopt;
  const fs::path p = flag.empty() ? manifest.parent_path() / "stations.csv" : fs::path(flag);
  if (flag.empty() && !fs::exists(p)) return std::nullopt;
  return eval::read_stations_csv(p);
}

// ------------------------------------------------------------- subcommands

int cmd_synth(const Common& c, const std::string& preset, std::optional<std::uint64_t> seed, const std::string& out_dir,
              std::ostream& out, std::ostream& err) {
  auto cfg = synth::preset(preset);
  cfg.apply(gather(c));
  if (seed) cfg.seed = *seed;
  cfg.validate();
  log_config(err, "synth", kv_json(cfg.to_text()), {{"preset", preset}, {"out", out_dir}});
  const auto scene = synth::generate_scene(cfg);
  synth::write_dataset(scene, out_dir);
  out << "wrote " << scene.dataset.samples.size() << " samples in " << scene.basins.size() << " basins to "
      << (fs::path(out_dir) / "manifest.csv").string() << "\n";
  return kOk;
}

int cmd_train(const Common& c, const std::string& data, const std::string& out_dir, const std::string& resume,
              std::optional<std::uint64_t> seed, bool verbose, std::ostream& out, std::ostream& err) {
  model::FusionConfig mc;
  train::TrainConfig tc;
  apply_train_entries(gather(c), mc, tc, "train");
  if (seed) tc.seed = *seed;
  mc.validate();
  tc.validate();
  auto config = kv_json(mc.to_text());
  config.update(kv_json(tc.to_text()));
  log_config(err, "train", config, {{"data", data}, {"out", out_dir}, {"resume", resume}});

  const auto dataset = train::load_dataset(data, tc.split, mc.patch_size);
  std::optional<model::FusionModel> start;
  if (!resume.empty()) start = model::load_model(fs::path(resume) / "last");
  const auto result = train::train_model(dataset, mc, tc, std::move(start));
  fs::create_directories(out_dir);
  model::save_model(result.best, fs::path(out_dir) / "model");
  model::save_model(result.last, fs::path(out_dir) / "last");
  write_text(fs::path(out_dir) / "loss.csv", train::format_history_csv(result.history));
  if (verbose) {
    for (const auto& h : result.history) {
      err << "step " << h.step << " train_rmse " << text::format_double(h.train_rmse);
      if (h.val_rmse) err << " val_rmse " << text::format_double(*h.val_rmse);
      err << "\n";
    }
  }
  const auto& last = result.history.back();
  out << "trained " << result.steps_run << " steps; best step " << result.best_step << "; train RMSE "
      << text::format_double(last.train_rmse) << "\n";
  return kOk;
}

int cmd_predict(const Common& c, const std::string& data, const std::string& model_stem, const std::string& out_dir,
                const std::string& split_name, std::ostream& out, std::ostream& err) {
  const auto entries = gather(c);
  const auto rule = split_from(entries, "predict");
  const auto split = parse_split(split_name);
  const auto threads = pipeline::thread_count();
  log_config(err, "predict", kv_json(split_text(rule)),
             {{"data", data}, {"model", model_stem}, {"out", out_dir}, {"split", split_name}, {"threads", threads}});
  const auto m = model::load_model(model_stem);
  const auto masks = pipeline::load_masks(data);
  const auto dataset = train::load_dataset(data, rule, m.config().patch_size);
  const auto items = pipeline::predict_items(m, dataset, masks, split, threads);
  fs::create_directories(out_dir);
  for (const auto& it : items) raster::write_raster(it.pred, fs::path(out_dir) / pipeline::item_file(it.basin, it.date));
  out << "wrote " << items.size() << " prediction rasters to " << out_dir << "\n";
  return kOk;
}

int cmd_smooth(const std::string& input, const std::string& output, double sigma, std::ostream& out,
               std::ostream& err) {
  log_config(err, "smooth", {{"sigma", text::format_double(sigma)}}, {{"input", input}, {"out", output}});
  if (!(sigma > 0.0)) throw ArgumentError("--sigma must be > 0");
  if (fs::is_directory(input)) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(input)) {
      if (e.is_regular_file() && e.path().extension() == ".rstr") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    fs::create_directories(output);
    for (const auto& f : files) {
      raster::write_raster(eval::gaussian_smooth(raster::read_raster(f), sigma), fs::path(output) / f.filename());
    }
    out << "smoothed " << files.size() << " rasters into " << output << "\n";
  } else {
    const auto r = eval::gaussian_smooth(raster::read_raster(input), sigma);
    if (fs::path(output).has_parent_path()) fs::create_directories(fs::path(output).parent_path());
    raster::write_raster(r, output);
    out << "smoothed " << input << " into " << output << "\n";
  }
  return kOk;
}

struct EvalArgs {
  std::string data, pred, out, split = "test", stations, curve, points;
  double span = 0.3;
  bool inject = false;
};

int cmd_evaluate(const Common& c, const EvalArgs& a, std::ostream& out, std::ostream& err) {
  if (a.inject) {
    log_config(err, "evaluate", {{"inject_table2", true}}, {{"out", a.out}});
    const auto rep = synth::inject_table2();
    if (!a.out.empty()) write_text(a.out, eval::format_report_csv(rep));
    out << eval::format_report_table(rep);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", rep.overall_rmse);
    out << "overall RMSE (area-weighted): " << buf << " inches\n";
    return kOk;
  }
  if (a.data.empty() || a.pred.empty() || a.out.empty()) {
    throw ConfigError("evaluate needs --data, --pred and --out (or --inject-table2)");
  }
  const auto rule = split_from(gather(c), "evaluate");
  const auto split = parse_split(a.split);
  log_config(err, "evaluate", kv_json(split_text(rule) + "span=" + text::format_double(a.span) + "\n"),
             {{"data", a.data}, {"pred", a.pred}, {"out", a.out}, {"split", a.split}, {"stations", a.stations},
              {"curve", a.curve}, {"points", a.points}});
  const auto masks = pipeline::load_masks(a.data);
  auto truths = load_truths(a.data, masks, rule, split);
  for (auto& it : truths.items) it.pred = raster::read_raster(fs::path(a.pred) / pipeline::item_file(it.basin, it.date));
  const auto stations = load_stations(a.stations, a.data);
  const auto rep = pipeline::score_items(truths.items, masks, {truths.train_mean, stations ? &*stations : nullptr});
  write_text(a.out, eval::format_report_csv(rep));
  const auto pts = pipeline::error_points(truths.items, masks);
  if (!a.points.empty()) write_text(a.points, pipeline::format_points_csv(pts));
  if (!a.curve.empty()) write_text(a.curve, eval::format_curve_csv(eval::loess_error_curve(pts.truth, pts.error, a.span)));
  out << eval::format_report_table(rep);
  return kOk;
}

int cmd_baselines(const Common& c, const std::string& data, const std::string& out_path, const std::string& split_name,
                  const std::string& stations_flag, std::ostream& out, std::ostream& err) {
  const auto rule = split_from(gather(c), "baselines");
  const auto split = parse_split(split_name);
  log_config(err, "baselines", kv_json(split_text(rule)),
             {{"data", data}, {"out", out_path}, {"split", split_name}, {"stations", stations_flag}});
  const auto masks = pipeline::load_masks(data);
  auto truths = load_truths(data, masks, rule, split);
  for (auto& it : truths.items) {
    it.pred = raster::Raster(it.truth.spec(), 1);
  }
  const auto stations = load_stations(stations_flag, data);
  const auto rep = pipeline::score_items(truths.items, masks, {truths.train_mean, stations ? &*stations : nullptr});
  auto opt = [](const std::optional<double>& v) { return v ? text::format_double(*v) : std::string(); };
  const std::string csv = "baseline,rmse\nZero Pred," + opt(rep.zero_pred) + "\nMean Pred," + opt(rep.mean_pred) +
                          "\nSNOTEL," + opt(rep.snotel) + "\n";
  write_text(out_path, csv);
  out << csv;
  return kOk;
}

int cmd_ablate(const Common& c, const std::string& data, const std::string& out_path, const std::string& seeds_text,
               std::ostream& out, std::ostream& err) {
  model::FusionConfig mc;
  train::TrainConfig tc;
  apply_train_entries(gather(c), mc, tc, "ablate");
  mc.validate();
  tc.validate();
  std::vector<std::uint64_t> seeds;
  for (const auto& f : text::split(seeds_text, ',')) seeds.push_back(kv::parse_size("seeds", std::string(text::trim(f))));
  const auto threads = pipeline::thread_count();
  auto config = kv_json(mc.to_text());
  config.update(kv_json(tc.to_text()));
  log_config(err, "ablate", config, {{"data", data}, {"out", out_path}, {"seeds", seeds_text}, {"threads", threads}});
  const auto masks = pipeline::load_masks(data);
  const auto dataset = train::load_dataset(data, tc.split, mc.patch_size);
  const auto rows = pipeline::run_ablation(dataset, masks, mc, tc, seeds, threads);
  const auto csv = pipeline::format_ablation_csv(rows, seeds);
  write_text(out_path, csv);
  out << csv;
  return kOk;
}

int cmd_plot(const std::string& report, const std::string& points, const std::string& curve, const std::string& out_dir,
             double span, std::ostream& out, std::ostream& err) {
  log_config(err, "plot", {{"span", text::format_double(span)}},
             {{"report", report}, {"points", points}, {"curve", curve}, {"out", out_dir}});
  if (report.empty() && points.empty()) throw ConfigError("plot needs --report and/or --points");
  fs::create_directories(out_dir);
  if (!report.empty()) {
    write_text(fs::path(out_dir) / "rmse_by_basin.svg", pipeline::rmse_bars_svg(eval::read_report_csv(report)));
    out << "wrote " << (fs::path(out_dir) / "rmse_by_basin.svg").string() << "\n";
  }
  if (!points.empty()) {
    const auto pts = pipeline::parse_points_csv(text::read_lines(points), points);
    std::vector<eval::CurvePoint> fitted;
    if (!curve.empty()) {
      fitted = eval::parse_curve_csv(text::read_lines(curve), curve);
    } else if (pts.truth.size() >= 10) {
      fitted = eval::loess_error_curve(pts.truth, pts.error, span);
    }
    write_text(fs::path(out_dir) / "error_vs_swe.svg", pipeline::error_scatter_svg(pts, fitted));
    out << "wrote " << (fs::path(out_dir) / "error_vs_swe.svg").string() << "\n";
  }
  return kOk;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const NumericalError*>(&e)) return kNumerical;
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ArgumentError*>(&e)) return kUsage;
  if (dynamic_cast<const Error*>(&e)) return kData;
  return 1;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"snowfuse: multi-source snow water equivalent estimation pipeline", "snowfuse"};
  app.require_subcommand(1);
  app.footer("Exit codes: 0 success, 2 usage or config error, 3 data or parse error, 4 numerical failure.\n"
             "SNOWFUSE_THREADS caps worker threads for predict and ablate (default 1).");
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "print per-evaluation training progress");

  Common common;
  std::optional<std::uint64_t> seed;

  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset (manifest, rasters, weather, stations)");
  std::string preset = "default", synth_out;
  add_common(synth_cmd, common);
  synth_cmd->add_option("--preset", preset, "default, sierra-like or overfit")->capture_default_str();
  synth_cmd->add_option("--seed", seed, "generator seed (overrides the seed key)");
  synth_cmd->add_option("-o,--out", synth_out, "output directory")->required();
  synth_cmd->footer(key_footer({&synth::synth_config_keys()}));

  const std::string train_footer = key_footer({&model::fusion_config_keys(), &train::train_config_keys()});
  auto* train_cmd = app.add_subcommand("train", "train the fusion model; writes model.*, last.* and loss.csv");
  std::string train_data, train_out, resume;
  add_common(train_cmd, common);
  train_cmd->add_option("--data", train_data, "dataset manifest.csv")->required();
  train_cmd->add_option("-o,--out", train_out, "output directory")->required();
  train_cmd->add_option("--resume", resume, "directory of a previous run; continues from its last.* checkpoint");
  train_cmd->add_option("--seed", seed, "training seed (overrides the seed key)");
  train_cmd->footer(train_footer);

  const std::string split_footer = key_footer({&train::train_config_keys()}, &kSplitKeys);
  auto* predict_cmd = app.add_subcommand("predict", "write one prediction raster per basin and date");
  std::string pred_data, pred_model, pred_out, pred_split = "all";
  add_common(predict_cmd, common);
  predict_cmd->add_option("--data", pred_data, "dataset manifest.csv")->required();
  predict_cmd->add_option("--model", pred_model, "checkpoint stem, e.g. run/model")->required();
  predict_cmd->add_option("-o,--out", pred_out, "output directory")->required();
  predict_cmd->add_option("--split", pred_split, "all, train, val or test")->capture_default_str();
  predict_cmd->footer(split_footer);

  auto* smooth_cmd = app.add_subcommand("smooth", "Gaussian post-smoothing of a prediction raster or directory");
  std::string smooth_in, smooth_out;
  double sigma = 1.0;
  smooth_cmd->add_option("--input", smooth_in, "raster file or directory of .rstr files")->required();
  smooth_cmd->add_option("-o,--out", smooth_out, "output file or directory")->required();
  smooth_cmd->add_option("--sigma", sigma, "kernel standard deviation in cells")->capture_default_str();

  auto* eval_cmd = app.add_subcommand("evaluate", "score predictions against ASO truth; writes the report CSV");
  EvalArgs ea;
  add_common(eval_cmd, common);
  eval_cmd->add_option("--data", ea.data, "dataset manifest.csv");
  eval_cmd->add_option("--pred", ea.pred, "directory written by predict or smooth");
  eval_cmd->add_option("-o,--out", ea.out, "report CSV path");
  eval_cmd->add_option("--split", ea.split, "all, train, val or test")->capture_default_str();
  eval_cmd->add_option("--stations", ea.stations, "station CSV (default: stations.csv next to the manifest; 'none' to skip)");
  eval_cmd->add_option("--curve", ea.curve, "also write the Loess error curve CSV here");
  eval_cmd->add_option("--points", ea.points, "also write the truth/error cell CSV here");
  eval_cmd->add_option("--span", ea.span, "Loess span")->capture_default_str();
  eval_cmd->add_flag("--inject-table2", ea.inject, "report the published results table instead of scoring files");
  eval_cmd->footer(split_footer);

  auto* base_cmd = app.add_subcommand("baselines", "zero, train-mean and nearest-station baseline RMSEs");
  std::string base_data, base_out, base_split = "test", base_stations;
  add_common(base_cmd, common);
  base_cmd->add_option("--data", base_data, "dataset manifest.csv")->required();
  base_cmd->add_option("-o,--out", base_out, "output CSV path")->required();
  base_cmd->add_option("--split", base_split, "all, train, val or test")->capture_default_str();
  base_cmd->add_option("--stations", base_stations, "station CSV (default: stations.csv next to the manifest)");
  base_cmd->footer(split_footer);

  auto* ablate_cmd = app.add_subcommand("ablate", "single-source models vs the fused model on the test split");
  std::string abl_data, abl_out, abl_seeds = "7";
  add_common(ablate_cmd, common);
  ablate_cmd->add_option("--data", abl_data, "dataset manifest.csv")->required();
  ablate_cmd->add_option("-o,--out", abl_out, "output CSV path")->required();
  ablate_cmd->add_option("--seeds", abl_seeds, "comma-separated training seeds")->capture_default_str();
  ablate_cmd->footer(train_footer);

  auto* plot_cmd = app.add_subcommand("plot", "render SVG figures from evaluate outputs");
  std::string plot_report, plot_points, plot_curve, plot_out;
  double plot_span = 0.3;
  plot_cmd->add_option("--report", plot_report, "report CSV (per-basin RMSE bars)");
  plot_cmd->add_option("--points", plot_points, "truth/error CSV (scatter)");
  plot_cmd->add_option("--curve", plot_curve, "Loess curve CSV; fitted from the points when absent");
  plot_cmd->add_option("--span", plot_span, "Loess span when fitting from points")->capture_default_str();
  plot_cmd->add_option("-o,--out", plot_out, "output directory")->required();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*synth_cmd) return cmd_synth(common, preset, seed, synth_out, out, err);
    if (*train_cmd) return cmd_train(common, train_data, train_out, resume, seed, verbose, out, err);
    if (*predict_cmd) return cmd_predict(common, pred_data, pred_model, pred_out, pred_split, out, err);
    if (*smooth_cmd) return cmd_smooth(smooth_in, smooth_out, sigma, out, err);
    if (*eval_cmd) return cmd_evaluate(common, ea, out, err);
    if (*base_cmd) return cmd_baselines(common, base_data, base_out, base_split, base_stations, out, err);
    if (*ablate_cmd) return cmd_ablate(common, abl_data, abl_out, abl_seeds, out, err);
    if (*plot_cmd) return cmd_plot(plot_report, plot_points, plot_curve, plot_out, plot_span, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e);
  }
  return kUsage;
}

}  // namespace snowfuse::cli
