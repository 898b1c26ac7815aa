#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "clayid/dataset.hpp"

namespace clayid {

enum class Activation { relu, linear };

struct LayerSpec {
  int width = 1;
  Activation activation = Activation::relu;
};

/// Feed-forward surrogate mapping (B, n, C) to one indentation depth.
/// Hidden layers are ReLU, the width-1 output layer is linear. Inputs
/// are standardized with the stored per-feature shift/scale.
struct MlpModel {
  std::vector<LayerSpec> layers;              ///< hidden layers + output layer
  std::vector<std::vector<double>> weights;   ///< per layer, row-major [out][in]
  std::vector<std::vector<double>> biases;    ///< per layer
  std::array<double, 3> input_shift{0.0, 0.0, 0.0};
  std::array<double, 3> input_scale{1.0, 1.0, 1.0};
  std::string name;

  static constexpr int kInputs = 3;

  /// Checks that layer shapes chain from 3 inputs to a width-1 linear
  /// output and that scales are strictly positive.
  void validate() const;

  std::size_t parameter_count() const;
};

/// Deterministic single-sample forward pass.
double forward(const MlpModel& model, const std::array<double, 3>& x);

/// Forward pass over many rows (x is rows*3 values, row-major).
void forward_batch(const MlpModel& model, std::span<const double> x,
                   std::span<double> out);

struct TrainConfig {
  int epochs = 20000;
  double split = 0.8;       ///< training fraction of the 80:20 split
  double lr = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  int batch = 0;            ///< rows per update; 0 = full batch
  bool early_stop = true;
  double early_stop_delta = 1e-10;  ///< min train-MSE improvement ...
  int early_stop_window = 200;      ///< ... over this many epochs

  void validate() const;
};

struct FitMetrics {
  double mse = 0.0;   ///< [depth^2]
  double rmse = 0.0;  ///< [depth]
  double r2 = 0.0;
  std::string split_tag;  ///< "train" or "validation"
};

/// MSE, RMSE and R^2 = 1 - SS_res/SS_tot (mean taken over the actuals).
/// Throws DegenerateDataError when all actuals are equal.
FitMetrics metrics(std::span<const double> y, std::span<const double> y_hat,
                   const std::string& split_tag);

/// Training rows for one impact case.
struct CaseData {
  std::vector<std::array<double, 3>> x;  ///< (B, n, C)
  std::vector<double> y;                 ///< depth [mm]
};
CaseData case_data(const SampleSet& set, int case_id);

struct HistoryPoint {
  int epoch = 0;
  double train_mse = 0.0;
  double val_mse = 0.0;
};

struct TrainOutput {
  MlpModel model;
  FitMetrics train;
  FitMetrics validation;
  std::vector<HistoryPoint> history;
  int epochs_run = 0;
};

/// ADAM on full-batch (or mini-batch) MSE via backpropagation, with a
/// seeded 80:20 shuffle split and He-style uniform initialization.
/// Deterministic: identical data/arch/config give bit-identical weights.
/// Throws DivergenceError if the loss becomes non-finite.
TrainOutput train(const CaseData& data, const std::vector<LayerSpec>& arch,
                  const TrainConfig& cfg);

struct GradCheckResult {
  double max_rel_error = 0.0;
  /// Smallest |pre-activation| seen in hidden layers; finite differences
  /// are unreliable when this is within the step of a ReLU kink.
  double min_abs_preactivation = 0.0;
};

/// Compares analytic gradients of the squared error on one row against
/// central finite differences over every weight and bias.
GradCheckResult gradient_check(const MlpModel& model,
                               const std::array<double, 3>& x, double y,
                               double step = 1e-5);

/// Loss and analytic gradients on a single row (exposed for the
/// finite-difference oracle and its negative controls).
struct LossGradients {
  double loss = 0.0;
  std::vector<std::vector<double>> weight_grads;
  std::vector<std::vector<double>> bias_grads;
};
LossGradients loss_gradients(const MlpModel& model,
                             const std::array<double, 3>& x, double y);

/// The six standard architectures per impact case: widths 25/50/75/100
/// with one hidden layer, plus 100 neurons split over two (50/50) and
/// three (34/33/33) layers. Names follow the case letter, e.g. "A4-2"
/// for case 1, 100 neurons, 2 hidden layers.
struct ArchitectureEntry {
  std::string name;
  int case_id = 0;
  std::vector<LayerSpec> arch;
  FitMetrics train;
  FitMetrics validation;
};
std::vector<std::pair<std::string, std::vector<LayerSpec>>> standard_architectures(
    int case_id);

struct ArchitectureGridResult {
  std::vector<ArchitectureEntry> entries;     ///< ranked per case
  std::map<int, TrainOutput> best_per_case;   ///< winner per impact case
};

/// Trains every standard architecture for every case present in `data`
/// and ranks per case by validation RMSE (ties: fewer layers, then fewer
/// parameters). Training errors propagate annotated with the model name.
ArchitectureGridResult run_architecture_grid(
    const std::map<int, CaseData>& data, const TrainConfig& cfg, int jobs = 0);

/// Versioned JSON model serialization; forward() is bit-identical across
/// a save/load round trip.
void save_model_json(const MlpModel& model, const std::filesystem::path& path,
                     const std::string& config_hash = {});
MlpModel load_model_json(const std::filesystem::path& path);
std::string model_to_json(const MlpModel& model, const std::string& config_hash = {});
MlpModel model_from_json(const std::string& text);

void write_history_csv(std::ostream& out, std::span<const HistoryPoint> history);

}  // namespace clayid
