#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mslab/dataset.hpp"
#include "mslab/models.hpp"

namespace mslab {

struct FoldSplit {
  int k = 5;
  std::vector<int> assignments;  // per-sample fold index in [0, k)

  std::vector<int> test_indices(int fold) const;
  std::vector<int> train_indices(int fold) const;
};

// Seeded permutation dealt round-robin into k near-equal folds.
FoldSplit kfold(int n, int k, std::uint64_t seed);

struct TrainConfig {
  int epochs = 20;
  int batch_size = 8;
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t shuffle_seed = 0;
};

// One (configuration, fold) measurement. Index sets stay in memory for the
// no-leakage invariant; wall time goes to the timing sidecar, never into
// report.csv, which must be byte-reproducible.
struct RunRow {
  std::string study;
  std::string variant = "-";
  std::string family;
  std::string direction;
  std::string channel = "-";
  std::string band = "-";
  std::string supplement = "-";
  std::string role;
  std::uint64_t seed = 0;
  int fold = 0;
  double train_mse = 0.0;
  double test_mse = 0.0;
  double reduction_percent = -1.0;  // per-fold, augmented rows only (-1 = n/a)
  double pixel_accuracy = -1.0;     // inverse rows only
  double wall_seconds = 0.0;
  std::vector<int> train_idx;
  std::vector<int> test_idx;
};

struct AggregateRow {
  std::string study, variant, family, direction, channel, band, supplement, role;
  int row_count = 0;
  double mean_test_mse = 0.0;
  double std_test_mse = 0.0;
  double reduction_percent = -1.0;  // vs the paired baseline aggregate
  bool below_85 = false;            // aggregated MSE ratio under 0.85
  double mean_pixel_accuracy = -1.0;
};

struct ExperimentReport {
  std::vector<RunRow> rows;
  std::vector<AggregateRow> aggregates;

  void merge(ExperimentReport other);
  void sort_canonical();
  // Rebuilds aggregates from rows (means, stddevs, baseline pairings).
  void compute_aggregates();

  std::string rows_csv() const;
  std::string aggregates_csv() const;
  std::string timing_csv() const;
};

// Trains on the other k-1 folds and evaluates on each held-out fold in turn.
// Phase targets train on (sin, cos) pairs; reported MSE for the phase channel
// is on the wrapped angle. When out_models is given it receives one trained
// model per fold.
std::vector<RunRow> train_eval(const Dataset& ds, const ModelConfig& config,
                               const TrainConfig& tc, const FoldSplit& split,
                               std::vector<Model>* out_models = nullptr);

// Evaluation without training; exposed so tests can check closed-form
// baselines (e.g. an all-zero model scores the zero predictor's MSE).
double evaluate_mse(const Model& model, const Dataset& ds,
                    const std::vector<int>& indices);
double evaluate_pixel_accuracy(const Model& model, const Dataset& ds,
                               const std::vector<int>& indices);

// Model sizing knobs shared by study runs.
struct StudyOptions {
  std::vector<Family> families = {Family::cnn, Family::lstm, Family::gru,
                                  Family::transformer};
  std::vector<Channel> channels = {Channel::amp_x, Channel::amp_y, Channel::phase};
  std::vector<Band> bands = {Band::low, Band::high};
  int hidden_size = 128;
  int depth = 2;
  int attention_heads = 4;
  std::uint64_t model_seed = 1;
  std::uint64_t fold_seed = 11;
  int workers = 1;
};

// Baseline vs supplement-augmented forward models under controlled pairing:
// identical folds, initialization seeds and batch orderings; the pair differs
// only in the supplement branch.
ExperimentReport run_augmentation_study(const Dataset& ds, const StudyOptions& opt,
                                        const TrainConfig& tc);

struct AsymmetryResult {
  double mean_low_to_high = 0.0;
  double mean_high_to_low = 0.0;
  double ratio = 0.0;  // mse_high_to_low / mse_low_to_high
  std::vector<double> per_repeat_ratio;
  ExperimentReport report;
};

// Spectrum-to-spectrum predictors in both directions over `repeats` seeds on
// a fixed fold split (repeat r holds out fold r mod k). Amplitude channels
// only, so the mechanism under test (amplitude damping and noise) drives the
// comparison.
AsymmetryResult run_asymmetry_experiment(const Dataset& ds, Family family,
                                         const TrainConfig& tc, int repeats,
                                         const StudyOptions& opt,
                                         const std::string& variant_label);

// Inverse (spectrum -> pattern) models per family and input band, plus the
// closed-form constant-0.5 baseline row (MSE 0.25 on binary pixels).
ExperimentReport run_inverse_study(const Dataset& ds, const StudyOptions& opt,
                                   const TrainConfig& tc);

}  // namespace mslab
