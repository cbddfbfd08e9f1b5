#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "sublinmap/dataset.hpp"
#include "sublinmap/types.hpp"

namespace sublinmap {

struct LinearClassifier {
  Vecf weights;
  float bias = 0.0f;

  double decide(const Eigen::Ref<const Vecf>& x) const {
    return weights.cast<double>().dot(x.cast<double>()) + static_cast<double>(bias);
  }
};

/// One learned periodic pattern: tau one-vs-rest affine classifiers, row j-1
/// of `weights` scoring phase j. Weights are quantized to f32 (the stored
/// form); `training_error` is recomputed from the quantized weights so that
/// a recount from a saved model reproduces it exactly.
struct PhaseClassifierBank {
  int period = 0;
  Matf weights;  // tau x d
  Vecf biases;   // tau
  double training_error = 0.0;

  int dim() const { return static_cast<int>(weights.cols()); }

  // Affine scores for all tau phases, accumulated in f64.
  Vecd decision_values(const Eigen::Ref<const Vecf>& x) const;

  // Cache weights/biases as f64 for the query path. Exact (f32 -> f64).
  void build_cache();

 private:
  Matd weights_d_;
  Vecd biases_d_;
};

struct PhaseMatch {
  int phase = 0;
  double value = 0.0;
};

struct BinaryProblem {
  Eigen::Ref<const Matf> features;     // N x d
  std::vector<std::int8_t> labels;     // +1 / -1
  double penalty_c = 1.0;

  void validate() const;
};

struct TrainOptions {
  double penalty_c = 0.0;  // <= 0 selects the log(N) default (natural log, floor 1)
  double tol = 1e-4;       // stop when the largest dual update in an epoch < tol
  int max_epochs = 200;
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = hardware concurrency
};

double default_penalty(std::int64_t n_rows);

/// Per-epoch diagnostics recorded by train_binary. `primal` holds the
/// objective 0.5*||w||^2 + 0.5*b^2 + C*sum(hinge) of the classifier the
/// trainer would return after each epoch; `dual` the dual objective.
struct TrainDiagnostics {
  std::vector<double> primal;
  std::vector<double> dual;
  double alpha_min = 0.0;
  double alpha_max = 0.0;
  int epochs = 0;
  bool converged = false;
};

/// Dual coordinate descent on the hinge dual (random permutation per epoch,
/// seeded). The bias is handled as an augmented constant-1 feature, so it is
/// regularized along with w.
LinearClassifier train_binary(const BinaryProblem& problem, const TrainOptions& opts,
                              TrainDiagnostics* diag = nullptr);

/// Per-frame phase assignment for frames 1..n: frame i gets (i mod tau) + 1.
std::vector<int> phase_labels(std::int64_t n, std::int64_t tau);

/// Trains the tau one-vs-rest classifiers for `period` over rows whose place
/// indices are given by `places` (multi-exemplar rows repeat a place). The
/// tau subproblems run concurrently; results are order-independent.
PhaseClassifierBank train_bank(const Eigen::Ref<const Matf>& features,
                               const std::vector<PlaceIndex>& places, std::int64_t period,
                               const TrainOptions& opts);
PhaseClassifierBank train_bank(const FrameDatabase& db, std::int64_t period,
                               const TrainOptions& opts);

/// argmax_j (w_j . x + b_j); ties break toward the smallest phase.
PhaseMatch decide_phase(const PhaseClassifierBank& bank, const Eigen::Ref<const Vecf>& x);
PhaseMatch decide_phase_from_values(const Vecd& values);

void save_bank(const PhaseClassifierBank& bank, std::ostream& out);
PhaseClassifierBank load_bank(std::istream& in);

}  // namespace sublinmap
