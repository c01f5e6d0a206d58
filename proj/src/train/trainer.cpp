#include <cmath>
#include <limits>
#include <numeric>

#include "snowfuse/error.hpp"
#include "snowfuse/nn/ops.hpp"
#include "snowfuse/nn/rng.hpp"
#include "snowfuse/text.hpp"
#include "snowfuse/train.hpp"

namespace snowfuse::train {

void TrainConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be a finite number >= 0");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (eval_every == 0) throw ConfigError("eval_every must be positive");
  if (patience == 0) throw ConfigError("patience must be positive");
  if (target_train_rmse < 0.0) throw ConfigError("target_train_rmse must be >= 0");
  split.validate();
}

const std::vector<std::pair<std::string, std::string>>& train_config_keys() {
  static const std::vector<std::pair<std::string, std::string>> keys = {
      {"lr", "Adam learning rate"},
      {"batch_size", "samples per step"},
      {"max_steps", "optimizer steps"},
      {"eval_every", "steps between RMSE evaluations"},
      {"seed", "initialisation and batch-order seed"},
      {"patience", "evaluations without validation improvement before stopping"},
      {"target_train_rmse", "stop once train RMSE (inches) falls below this; 0 disables"},
      {"zero_init_head", "start the output layer at zero (prediction = train mean) [bool]"},
      {"train_years", "calendar years in the training split [list]"},
      {"val_years", "calendar years in the validation split [list]"},
      {"test_years", "calendar years in the test split [list]"},
  };
  return keys;
}

void TrainConfig::set(const std::string& key, const std::string& v) {
  if (key == "lr") {
    lr = kv::parse_real(key, v);
  } else if (key == "batch_size") {
    batch_size = kv::parse_size(key, v);
  } else if (key == "max_steps") {
    max_steps = kv::parse_size(key, v);
  } else if (key == "eval_every") {
    eval_every = kv::parse_size(key, v);
  } else if (key == "seed") {
    seed = kv::parse_size(key, v);
  } else if (key == "patience") {
    patience = kv::parse_size(key, v);
  } else if (key == "target_train_rmse") {
    target_train_rmse = kv::parse_real(key, v);
  } else if (key == "zero_init_head") {
    zero_init_head = kv::parse_bool(key, v);
  } else if (key == "train_years") {
    split.train_years = kv::parse_int_list(key, v);
  } else if (key == "val_years") {
    split.val_years = kv::parse_int_list(key, v);
  } else if (key == "test_years") {
    split.test_years = kv::parse_int_list(key, v);
  } else {
    throw ConfigError("unknown training config key '" + key + "'");
  }
}

void TrainConfig::apply(const kv::Entries& entries) {
  for (const auto& [k, v] : entries) set(k, v);
}

std::string TrainConfig::to_text() const {
  std::string s;
  s += "lr=" + text::format_double(lr) + "\n";
  s += "batch_size=" + std::to_string(batch_size) + "\n";
  s += "max_steps=" + std::to_string(max_steps) + "\n";
  s += "eval_every=" + std::to_string(eval_every) + "\n";
  s += "seed=" + std::to_string(seed) + "\n";
  s += "patience=" + std::to_string(patience) + "\n";
  s += "target_train_rmse=" + text::format_double(target_train_rmse) + "\n";
  s += std::string("zero_init_head=") + (zero_init_head ? "1" : "0") + "\n";
  s += "train_years=" + kv::join(split.train_years) + "\n";
  s += "val_years=" + kv::join(split.val_years) + "\n";
  s += "test_years=" + kv::join(split.test_years) + "\n";
  return s;
}

std::string format_history_csv(const std::vector<HistoryRow>& rows) {
  std::string s = "step,train_rmse,val_rmse\n";
  for (const auto& r : rows) {
    s += std::to_string(r.step) + "," + text::format_double(r.train_rmse) + "," +
         (r.val_rmse ? text::format_double(*r.val_rmse) : std::string()) + "\n";
  }
  return s;
}

double rmse_over(const model::FusionModel& model, const std::vector<CellSample>& samples) {
  if (samples.empty()) throw EmptyEvaluationError("rmse_over: no samples");
  double sse = 0.0;
  for (const auto& s : samples) {
    const double e = model.predict(s) - s.target_swe;
    sse += e * e;
  }
  return std::sqrt(sse / static_cast<double>(samples.size()));
}

std::vector<std::size_t> batch_indices(std::size_t n, std::size_t batch_size, std::uint64_t seed, std::size_t step) {
  if (n == 0) throw ArgumentError("batch_indices: empty training set");
  std::vector<std::size_t> out;
  out.reserve(batch_size);
  std::size_t cached_epoch = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> perm(n);
  for (std::size_t j = 0; j < batch_size; ++j) {
    const std::size_t pos = step * batch_size + j;
    const std::size_t epoch = pos / n;
    if (epoch != cached_epoch) {
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      auto rng = nn::SeededRng(seed).fork(epoch);
      for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.index(i + 1)]);
      cached_epoch = epoch;
    }
    out.push_back(perm[pos % n]);
  }
  return out;
}

TrainResult train_model(const Dataset& dataset, const model::FusionConfig& model_cfg, const TrainConfig& cfg,
                        std::optional<model::FusionModel> resume) {
  model_cfg.validate();
  cfg.validate();
  const auto train_idx = dataset.indices(Split::Train);
  if (train_idx.empty()) throw ConfigError("train_model: the training split is empty");
  const auto train_set = dataset.subset(Split::Train);
  const auto val_set = dataset.subset(Split::Val);

  std::optional<model::FusionModel> current;
  if (resume) {
    if (resume->config().to_text() != model_cfg.to_text()) {
      throw ConfigError("train_model: checkpoint architecture differs from the requested configuration");
    }
    current = std::move(*resume);
  } else {
    current.emplace(model_cfg, cfg.seed);
    current->set_scaler(model::FeatureScaler::fit(train_set));
    if (cfg.zero_init_head) current->zero_output_layer();
  }
  auto& m = *current;
  const auto scaler = m.scaler();
  const nn::AdamConfig adam{cfg.lr};

  TrainResult result{m, m, {}, 0, 0};
  double best_val = std::numeric_limits<double>::infinity();
  std::size_t bad = 0;

  // returns true when training should stop
  auto evaluate = [&](std::size_t step) {
    HistoryRow row{step, rmse_over(m, train_set), std::nullopt};
    if (!val_set.empty()) row.val_rmse = rmse_over(m, val_set);
    result.history.push_back(row);
    if (row.val_rmse) {
      if (*row.val_rmse < best_val) {
        best_val = *row.val_rmse;
        result.best = m;
        result.best_step = step;
        bad = 0;
      } else if (++bad >= cfg.patience) {
        return true;
      }
    }
    return cfg.target_train_rmse > 0.0 && row.train_rmse < cfg.target_train_rmse;
  };

  std::size_t step = static_cast<std::size_t>(m.params().adam_steps());
  bool stop = step == 0 ? evaluate(0) : false;
  const double inv_batch = 1.0 / static_cast<double>(cfg.batch_size);
  while (!stop && step < cfg.max_steps) {
    const auto batch = batch_indices(train_idx.size(), cfg.batch_size, cfg.seed, step);
    m.params().zero_grad();
    for (auto b : batch) {
      const auto& s = train_set[b];
      const auto out = m.forward_standardized(s);
      const auto target = nn::Tensor::scalar((s.target_swe - scaler.target_mean) / scaler.target_std);
      const auto loss = nn::mse_loss(out, target);
      if (!std::isfinite(loss.item())) {
        throw NumericalError("non-finite loss at step " + std::to_string(step) + " (sample " + s.basin + " " +
                             s.date.iso() + ")");
      }
      loss.backward(inv_batch);
    }
    m.params().adam_step(adam);
    ++step;
    ++result.steps_run;
    if (step % cfg.eval_every == 0 || step == cfg.max_steps) stop = evaluate(step);
  }
  result.last = m;
  if (val_set.empty()) {
    result.best = m;
    result.best_step = step;
  }
  return result;
}

}  // namespace snowfuse::train
