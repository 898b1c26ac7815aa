#include "clayid/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "clayid/csv.hpp"
#include "clayid/errors.hpp"
#include "clayid/parallel.hpp"
#include "clayid/rng.hpp"

namespace clayid {

namespace {

double activate(Activation a, double z) {
  return a == Activation::relu ? std::max(z, 0.0) : z;
}

std::string activation_name(Activation a) {
  return a == Activation::relu ? "relu" : "linear";
}

Activation activation_from_name(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "linear") return Activation::linear;
  throw SchemaError("unknown activation '" + name + "'");
}

}  // namespace

void MlpModel::validate() const {
  if (layers.empty()) throw ShapeError("model has no layers");
  if (layers.back().width != 1 || layers.back().activation != Activation::linear) {
    throw ShapeError("output layer must be width-1 linear");
  }
  for (std::size_t i = 0; i + 1 < layers.size(); ++i) {
    if (layers[i].activation != Activation::relu) {
      throw ShapeError("hidden layer " + std::to_string(i) + " must be relu");
    }
    if (layers[i].width < 1) throw ShapeError("layer width must be >= 1");
  }
  if (weights.size() != layers.size() || biases.size() != layers.size()) {
    throw ShapeError("weights/biases do not match layer count");
  }
  int fan_in = kInputs;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::size_t expected =
        static_cast<std::size_t>(layers[i].width) * fan_in;
    if (weights[i].size() != expected) {
      throw ShapeError("layer " + std::to_string(i) + ": expected " +
                       std::to_string(expected) + " weights, got " +
                       std::to_string(weights[i].size()));
    }
    if (biases[i].size() != static_cast<std::size_t>(layers[i].width)) {
      throw ShapeError("layer " + std::to_string(i) + ": bias size mismatch");
    }
    fan_in = layers[i].width;
  }
  for (double s : input_scale) {
    if (!(s > 0.0)) throw ShapeError("input_norm scale must be > 0");
  }
}

std::size_t MlpModel::parameter_count() const {
  std::size_t count = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    count += weights[i].size() + biases[i].size();
  }
  return count;
}

double forward(const MlpModel& model, const std::array<double, 3>& x) {
  double out = 0.0;
  forward_batch(model, std::span<const double>(x.data(), 3), {&out, 1});
  return out;
}

void forward_batch(const MlpModel& model, std::span<const double> x,
                   std::span<double> out) {
  model.validate();
  if (x.size() % MlpModel::kInputs != 0) {
    throw ShapeError("forward_batch: input size not a multiple of 3");
  }
  const std::size_t rows = x.size() / MlpModel::kInputs;
  if (out.size() != rows) throw ShapeError("forward_batch: output size mismatch");

  std::vector<double> current(rows * MlpModel::kInputs);
  for (std::size_t r = 0; r < rows; ++r) {
    for (int f = 0; f < MlpModel::kInputs; ++f) {
      current[r * MlpModel::kInputs + f] =
          (x[r * MlpModel::kInputs + f] - model.input_shift[f]) /
          model.input_scale[f];
    }
  }

  std::size_t width_in = MlpModel::kInputs;
  std::vector<double> next;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const std::size_t width_out = model.layers[l].width;
    const Activation act = model.layers[l].activation;
    const double* w = model.weights[l].data();
    const double* b = model.biases[l].data();
    next.assign(rows * width_out, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* in = current.data() + r * width_in;
      double* res = next.data() + r * width_out;
      for (std::size_t o = 0; o < width_out; ++o) {
        double z = b[o];
        const double* wrow = w + o * width_in;
        for (std::size_t i = 0; i < width_in; ++i) z += wrow[i] * in[i];
        res[o] = activate(act, z);
      }
    }
    current.swap(next);
    width_in = width_out;
  }
  for (std::size_t r = 0; r < rows; ++r) out[r] = current[r];
}

void TrainConfig::validate() const {
  if (!(split > 0.0 && split < 1.0)) {
    throw InvalidParameterError("train: split must be in (0, 1)");
  }
  if (epochs < 1) throw InvalidParameterError("train: epochs must be >= 1");
  if (!(lr > 0.0)) throw InvalidParameterError("train: lr must be > 0");
}

FitMetrics metrics(std::span<const double> y, std::span<const double> y_hat,
                   const std::string& split_tag) {
  if (y.size() != y_hat.size() || y.empty()) {
    throw InvalidParameterError("metrics: size mismatch or empty input");
  }
  double mean = 0.0;
  for (double v : y) mean += v;
  mean /= static_cast<double>(y.size());

  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double r = y[i] - y_hat[i];
    const double d = y[i] - mean;
    ss_res += r * r;
    ss_tot += d * d;
  }
  if (ss_tot == 0.0) {
    throw DegenerateDataError("metrics: all actual values are equal");
  }

  FitMetrics m;
  m.mse = ss_res / static_cast<double>(y.size());
  m.rmse = std::sqrt(m.mse);
  m.r2 = 1.0 - ss_res / ss_tot;
  m.split_tag = split_tag;
  return m;
}

CaseData case_data(const SampleSet& set, int case_id) {
  CaseData data;
  data.x.reserve(set.rows.size());
  data.y = set.depth_column(case_id);
  for (const SampleRow& row : set.rows) {
    data.x.push_back({row.params.jc.B, row.params.jc.n, row.params.jc.C});
  }
  return data;
}

namespace {

/// Mutable training view of a model: forward pass caching activations,
/// backward pass producing gradients.
struct Workspace {
  // Per layer: pre-activations z and activations a for every row of the
  // current batch; delta buffers for backprop.
  std::vector<std::vector<double>> z, a;
  std::vector<double> input;  // normalized inputs of the batch
};

/// Accumulates MSE gradients over the rows [first, last) of (x, y) into
/// grads; returns the summed squared error. All loops run in fixed row
/// order so results are bit-reproducible.
double accumulate_gradients(const MlpModel& model,
                            std::span<const std::array<double, 3>> x,
                            std::span<const double> y,
                            std::span<const std::size_t> rows,
                            double inv_count,
                            std::vector<std::vector<double>>& weight_grads,
                            std::vector<std::vector<double>>& bias_grads) {
  const std::size_t n_layers = model.layers.size();
  std::vector<std::vector<double>> z(n_layers), a(n_layers);
  std::vector<double> delta, delta_prev;
  double sum_sq = 0.0;

  for (std::size_t row : rows) {
    std::array<double, 3> xin;
    for (int f = 0; f < 3; ++f) {
      xin[f] = (x[row][f] - model.input_shift[f]) / model.input_scale[f];
    }

    // Forward with cached activations.
    std::size_t width_in = 3;
    const double* in = xin.data();
    for (std::size_t l = 0; l < n_layers; ++l) {
      const std::size_t width_out = model.layers[l].width;
      z[l].assign(width_out, 0.0);
      a[l].assign(width_out, 0.0);
      const double* w = model.weights[l].data();
      for (std::size_t o = 0; o < width_out; ++o) {
        double v = model.biases[l][o];
        const double* wrow = w + o * width_in;
        for (std::size_t i = 0; i < width_in; ++i) v += wrow[i] * in[i];
        z[l][o] = v;
        a[l][o] = activate(model.layers[l].activation, v);
      }
      in = a[l].data();
      width_in = width_out;
    }

    const double err = a[n_layers - 1][0] - y[row];
    sum_sq += err * err;

    // Backward. dL/d(out) for the batch-mean squared error.
    delta.assign(1, 2.0 * err * inv_count);
    for (std::size_t l = n_layers; l-- > 0;) {
      const std::size_t width_out = model.layers[l].width;
      const std::size_t width_prev = l == 0 ? 3 : model.layers[l - 1].width;
      const double* prev_act = l == 0 ? xin.data() : a[l - 1].data();

      for (std::size_t o = 0; o < width_out; ++o) {
        const double d = delta[o];
        bias_grads[l][o] += d;
        double* grow = weight_grads[l].data() + o * width_prev;
        for (std::size_t i = 0; i < width_prev; ++i) grow[i] += d * prev_act[i];
      }
      if (l == 0) break;

      delta_prev.assign(width_prev, 0.0);
      const double* w = model.weights[l].data();
      for (std::size_t o = 0; o < width_out; ++o) {
        const double d = delta[o];
        const double* wrow = w + o * width_prev;
        for (std::size_t i = 0; i < width_prev; ++i) delta_prev[i] += d * wrow[i];
      }
      // ReLU gate of the layer below (subgradient 0 at the kink).
      for (std::size_t i = 0; i < width_prev; ++i) {
        if (z[l - 1][i] <= 0.0) delta_prev[i] = 0.0;
      }
      delta.swap(delta_prev);
    }
  }
  return sum_sq;
}

double evaluate_mse(const MlpModel& model,
                    std::span<const std::array<double, 3>> x,
                    std::span<const double> y,
                    std::span<const std::size_t> rows) {
  double sum_sq = 0.0;
  for (std::size_t row : rows) {
    const double pred = forward(model, x[row]);
    const double err = pred - y[row];
    sum_sq += err * err;
  }
  return sum_sq / static_cast<double>(rows.size());
}

}  // namespace

TrainOutput train(const CaseData& data, const std::vector<LayerSpec>& arch,
                  const TrainConfig& cfg) {
  cfg.validate();
  if (data.x.size() != data.y.size()) {
    throw ShapeError("train: x/y size mismatch");
  }
  if (data.x.size() < 5) {
    throw InsufficientDataError("train: need at least 5 rows, got " +
                                std::to_string(data.x.size()));
  }
  if (arch.empty() || arch.back().width != 1 ||
      arch.back().activation != Activation::linear) {
    throw ShapeError("train: architecture must end in a width-1 linear layer");
  }

  const std::size_t n = data.x.size();
  SplitMix64 rng(cfg.seed);

  // Seeded shuffle split.
  std::vector<std::size_t> order = rng.permutation(n);
  std::size_t n_train = static_cast<std::size_t>(std::llround(cfg.split * n));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  std::vector<std::size_t> train_rows(order.begin(), order.begin() + n_train);
  std::vector<std::size_t> val_rows(order.begin() + n_train, order.end());

  TrainOutput out;
  MlpModel& model = out.model;
  model.layers = arch;

  // Standardize inputs over the training split.
  for (int f = 0; f < 3; ++f) {
    double mean = 0.0;
    for (std::size_t r : train_rows) mean += data.x[r][f];
    mean /= static_cast<double>(n_train);
    double var = 0.0;
    for (std::size_t r : train_rows) {
      const double d = data.x[r][f] - mean;
      var += d * d;
    }
    const double sd = std::sqrt(var / static_cast<double>(n_train));
    model.input_shift[f] = mean;
    model.input_scale[f] = sd > 0.0 ? sd : 1.0;
  }

  // He-style uniform init, biases at zero.
  int fan_in = MlpModel::kInputs;
  for (const LayerSpec& layer : arch) {
    const double limit = std::sqrt(6.0 / fan_in);
    std::vector<double> w(static_cast<std::size_t>(layer.width) * fan_in);
    for (double& v : w) v = rng.uniform(-limit, limit);
    model.weights.push_back(std::move(w));
    model.biases.emplace_back(layer.width, 0.0);
    fan_in = layer.width;
  }
  model.validate();

  // ADAM state.
  std::vector<std::vector<double>> mw, vw, mb, vb, gw, gb;
  for (std::size_t l = 0; l < arch.size(); ++l) {
    mw.emplace_back(model.weights[l].size(), 0.0);
    vw.emplace_back(model.weights[l].size(), 0.0);
    gw.emplace_back(model.weights[l].size(), 0.0);
    mb.emplace_back(model.biases[l].size(), 0.0);
    vb.emplace_back(model.biases[l].size(), 0.0);
    gb.emplace_back(model.biases[l].size(), 0.0);
  }

  const std::size_t batch =
      cfg.batch <= 0 ? n_train : std::min<std::size_t>(cfg.batch, n_train);
  std::vector<std::size_t> epoch_order = train_rows;

  long long adam_t = 0;
  double best_window_mse = std::numeric_limits<double>::infinity();
  int epochs_since_improvement = 0;

  out.history.reserve(cfg.epochs);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double epoch_sum_sq = 0.0;
    if (batch < n_train) rng.shuffle(epoch_order);

    for (std::size_t start = 0; start < n_train; start += batch) {
      const std::size_t stop = std::min(start + batch, n_train);
      const double inv_count = 1.0 / static_cast<double>(stop - start);
      for (auto& g : gw) std::fill(g.begin(), g.end(), 0.0);
      for (auto& g : gb) std::fill(g.begin(), g.end(), 0.0);

      epoch_sum_sq += accumulate_gradients(
          model, data.x, data.y,
          std::span<const std::size_t>(epoch_order.data() + start, stop - start),
          inv_count, gw, gb);

      ++adam_t;
      const double bc1 = 1.0 - std::pow(cfg.adam_beta1, adam_t);
      const double bc2 = 1.0 - std::pow(cfg.adam_beta2, adam_t);
      for (std::size_t l = 0; l < arch.size(); ++l) {
        auto step = [&](std::vector<double>& theta, std::vector<double>& m,
                        std::vector<double>& v, const std::vector<double>& g) {
          for (std::size_t i = 0; i < theta.size(); ++i) {
            m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * g[i];
            v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * g[i] * g[i];
            theta[i] -= cfg.lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg.adam_eps);
          }
        };
        step(model.weights[l], mw[l], vw[l], gw[l]);
        step(model.biases[l], mb[l], vb[l], gb[l]);
      }
    }

    const double train_mse = epoch_sum_sq / static_cast<double>(n_train);
    if (!std::isfinite(train_mse)) {
      throw DivergenceError("train: loss became non-finite at epoch " +
                            std::to_string(epoch));
    }
    const double val_mse = evaluate_mse(model, data.x, data.y, val_rows);
    out.history.push_back({epoch, train_mse, val_mse});
    out.epochs_run = epoch;

    if (cfg.early_stop) {
      if (train_mse < best_window_mse - cfg.early_stop_delta) {
        best_window_mse = train_mse;
        epochs_since_improvement = 0;
      } else if (++epochs_since_improvement >= cfg.early_stop_window) {
        break;
      }
    }
  }

  // Final metrics on both splits.
  auto collect = [&](std::span<const std::size_t> rows, const std::string& tag) {
    std::vector<double> actual, predicted;
    actual.reserve(rows.size());
    predicted.reserve(rows.size());
    for (std::size_t r : rows) {
      actual.push_back(data.y[r]);
      predicted.push_back(forward(model, data.x[r]));
    }
    return metrics(actual, predicted, tag);
  };
  out.train = collect(train_rows, "train");
  out.validation = collect(val_rows, "validation");
  return out;
}

LossGradients loss_gradients(const MlpModel& model,
                             const std::array<double, 3>& x, double y) {
  model.validate();
  LossGradients out;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    out.weight_grads.emplace_back(model.weights[l].size(), 0.0);
    out.bias_grads.emplace_back(model.biases[l].size(), 0.0);
  }
  const std::size_t rows[] = {0};
  const std::array<double, 3> xs[] = {x};
  const double ys[] = {y};
  const double sum_sq = accumulate_gradients(model, xs, ys, rows, 1.0,
                                             out.weight_grads, out.bias_grads);
  out.loss = sum_sq;
  return out;
}

GradCheckResult gradient_check(const MlpModel& model,
                               const std::array<double, 3>& x, double y,
                               double step) {
  const LossGradients analytic = loss_gradients(model, x, y);

  GradCheckResult result;
  result.min_abs_preactivation = std::numeric_limits<double>::infinity();

  // Track pre-activation distance to the ReLU kink.
  {
    std::array<double, 3> xin;
    for (int f = 0; f < 3; ++f) {
      xin[f] = (x[f] - model.input_shift[f]) / model.input_scale[f];
    }
    std::vector<double> current(xin.begin(), xin.end());
    std::size_t width_in = 3;
    for (std::size_t l = 0; l + 1 < model.layers.size(); ++l) {
      const std::size_t width_out = model.layers[l].width;
      std::vector<double> next(width_out);
      for (std::size_t o = 0; o < width_out; ++o) {
        double z = model.biases[l][o];
        for (std::size_t i = 0; i < width_in; ++i) {
          z += model.weights[l][o * width_in + i] * current[i];
        }
        result.min_abs_preactivation =
            std::min(result.min_abs_preactivation, std::abs(z));
        next[o] = activate(Activation::relu, z);
      }
      current.swap(next);
      width_in = width_out;
    }
    if (!std::isfinite(result.min_abs_preactivation)) {
      result.min_abs_preactivation = 1.0;  // no hidden layers
    }
  }

  MlpModel probe = model;
  auto loss_at = [&]() {
    const double err = forward(probe, x) - y;
    return err * err;
  };

  auto check = [&](std::vector<double>& theta, const std::vector<double>& grad) {
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double saved = theta[i];
      theta[i] = saved + step;
      const double lp = loss_at();
      theta[i] = saved - step;
      const double lm = loss_at();
      theta[i] = saved;

      const double numeric = (lp - lm) / (2.0 * step);
      const double denom = std::max(std::abs(numeric), std::abs(grad[i]));
      if (denom < 1e-10) continue;
      result.max_rel_error =
          std::max(result.max_rel_error, std::abs(numeric - grad[i]) / denom);
    }
  };
  for (std::size_t l = 0; l < probe.layers.size(); ++l) {
    check(probe.weights[l], analytic.weight_grads[l]);
    check(probe.biases[l], analytic.bias_grads[l]);
  }
  return result;
}

std::vector<std::pair<std::string, std::vector<LayerSpec>>> standard_architectures(
    int case_id) {
  const char letter = static_cast<char>('A' + (case_id - 1));
  auto hidden = [](std::initializer_list<int> widths) {
    std::vector<LayerSpec> arch;
    for (int w : widths) arch.push_back({w, Activation::relu});
    arch.push_back({1, Activation::linear});
    return arch;
  };
  std::vector<std::pair<std::string, std::vector<LayerSpec>>> archs;
  archs.emplace_back(std::string{letter} + "1", hidden({25}));
  archs.emplace_back(std::string{letter} + "2", hidden({50}));
  archs.emplace_back(std::string{letter} + "3", hidden({75}));
  archs.emplace_back(std::string{letter} + "4", hidden({100}));
  archs.emplace_back(std::string{letter} + "4-2", hidden({50, 50}));
  archs.emplace_back(std::string{letter} + "4-3", hidden({34, 33, 33}));
  return archs;
}

ArchitectureGridResult run_architecture_grid(const std::map<int, CaseData>& data,
                                             const TrainConfig& cfg, int jobs) {
  struct Job {
    int case_id;
    std::string name;
    std::vector<LayerSpec> arch;
  };
  std::vector<Job> jobs_list;
  for (const auto& [case_id, case_rows] : data) {
    (void)case_rows;
    for (auto& [name, arch] : standard_architectures(case_id)) {
      jobs_list.push_back({case_id, name, arch});
    }
  }

  std::vector<TrainOutput> outputs(jobs_list.size());
  std::vector<std::string> errors(jobs_list.size());
  parallel_for(jobs_list.size(), jobs, [&](std::size_t i) {
    const Job& job = jobs_list[i];
    TrainConfig job_cfg = cfg;
    // Every model trains from its own deterministic stream.
    job_cfg.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(i));
    try {
      outputs[i] = train(data.at(job.case_id), job.arch, job_cfg);
      outputs[i].model.name = job.name;
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  for (std::size_t i = 0; i < jobs_list.size(); ++i) {
    if (!errors[i].empty()) {
      throw DivergenceError("model " + jobs_list[i].name + ": " + errors[i]);
    }
  }

  ArchitectureGridResult result;
  for (std::size_t i = 0; i < jobs_list.size(); ++i) {
    result.entries.push_back({jobs_list[i].name, jobs_list[i].case_id,
                              jobs_list[i].arch, outputs[i].train,
                              outputs[i].validation});
  }
  // Rank by (case, validation RMSE), ties by fewer layers then fewer
  // parameters.
  auto layer_count = [](const std::vector<LayerSpec>& arch) {
    return arch.size() - 1;  // hidden layers
  };
  auto param_count = [](const std::vector<LayerSpec>& arch) {
    std::size_t count = 0;
    int fan_in = MlpModel::kInputs;
    for (const LayerSpec& l : arch) {
      count += static_cast<std::size_t>(l.width) * fan_in + l.width;
      fan_in = l.width;
    }
    return count;
  };
  std::sort(result.entries.begin(), result.entries.end(),
            [&](const ArchitectureEntry& a, const ArchitectureEntry& b) {
              if (a.case_id != b.case_id) return a.case_id < b.case_id;
              if (a.validation.rmse != b.validation.rmse) {
                return a.validation.rmse < b.validation.rmse;
              }
              if (layer_count(a.arch) != layer_count(b.arch)) {
                return layer_count(a.arch) < layer_count(b.arch);
              }
              return param_count(a.arch) < param_count(b.arch);
            });

  for (const auto& [case_id, case_rows] : data) {
    (void)case_rows;
    for (const ArchitectureEntry& entry : result.entries) {
      if (entry.case_id != case_id) continue;
      // First entry for the case is the ranked winner; retrain is not
      // needed because outputs are kept.
      for (std::size_t i = 0; i < jobs_list.size(); ++i) {
        if (jobs_list[i].case_id == case_id && jobs_list[i].name == entry.name) {
          result.best_per_case[case_id] = outputs[i];
          break;
        }
      }
      break;
    }
  }
  return result;
}

std::string model_to_json(const MlpModel& model, const std::string& config_hash) {
  model.validate();
  nlohmann::json j;
  j["format"] = "clayid-mlp";
  j["version"] = 1;
  j["name"] = model.name;
  if (!config_hash.empty()) j["config_hash"] = config_hash;
  nlohmann::json layers = nlohmann::json::array();
  for (const LayerSpec& l : model.layers) {
    layers.push_back({{"width", l.width},
                      {"activation", activation_name(l.activation)}});
  }
  j["layers"] = layers;
  j["input_norm"] = {{"shift", model.input_shift}, {"scale", model.input_scale}};
  j["weights"] = model.weights;
  j["biases"] = model.biases;
  return j.dump(2) + "\n";
}

MlpModel model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("model json: ") + e.what());
  }
  if (j.value("format", "") != "clayid-mlp" || j.value("version", 0) != 1) {
    throw SchemaError("model json: field 'format'/'version' mismatch");
  }
  MlpModel model;
  model.name = j.value("name", "");
  for (const auto& l : j.at("layers")) {
    model.layers.push_back({l.at("width").get<int>(),
                            activation_from_name(l.at("activation"))});
  }
  model.input_shift = j.at("input_norm").at("shift").get<std::array<double, 3>>();
  model.input_scale = j.at("input_norm").at("scale").get<std::array<double, 3>>();
  model.weights = j.at("weights").get<std::vector<std::vector<double>>>();
  model.biases = j.at("biases").get<std::vector<std::vector<double>>>();
  model.validate();
  return model;
}

void save_model_json(const MlpModel& model, const std::filesystem::path& path,
                     const std::string& config_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot write '" + path.string() + "'");
  out << model_to_json(model, config_hash);
}

MlpModel load_model_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot open '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return model_from_json(buf.str());
  } catch (const SchemaError& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

void write_history_csv(std::ostream& out, std::span<const HistoryPoint> history) {
  csv::Table table;
  table.header = {"epoch", "train_mse", "val_mse"};
  char buf[64];
  for (const HistoryPoint& h : history) {
    std::vector<std::string> row;
    row.push_back(std::to_string(h.epoch));
    std::snprintf(buf, sizeof(buf), "%.9g", h.train_mse);
    row.emplace_back(buf);
    std::snprintf(buf, sizeof(buf), "%.9g", h.val_mse);
    row.emplace_back(buf);
    table.rows.push_back(std::move(row));
  }
  out << csv::to_string(table);
}

}  // namespace clayid
