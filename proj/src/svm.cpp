#include "sublinmap/svm.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <stdexcept>

#include "sublinmap/io.hpp"
#include "sublinmap/parallel.hpp"
#include "sublinmap/rng.hpp"

namespace sublinmap {

namespace {
constexpr char kBankMagic[5] = "SLMB";
}

double default_penalty(std::int64_t n_rows) {
  return std::max(1.0, std::log(static_cast<double>(n_rows)));
}

void BinaryProblem::validate() const {
  const auto n = static_cast<std::size_t>(features.rows());
  if (labels.size() != n) throw std::invalid_argument("label count does not match N");
  bool pos = false, neg = false;
  for (auto y : labels) {
    if (y != 1 && y != -1) throw std::invalid_argument("labels must be +1 or -1");
    (y == 1 ? pos : neg) = true;
  }
  if (!pos || !neg)
    throw std::invalid_argument("binary problem needs at least one positive and one negative");
  if (penalty_c <= 0) throw std::invalid_argument("penalty_c must be > 0");
}

namespace {

struct DenseProblem {
  const Matd& x;  // N x d, f64
  const std::vector<std::int8_t>& y;
  double c;
};

double primal_objective(const DenseProblem& p, const Vecd& w, double b) {
  Vecd margins = p.x * w;
  double hinge = 0.0;
  for (Eigen::Index i = 0; i < margins.size(); ++i) {
    double m = 1.0 - p.y[static_cast<std::size_t>(i)] * (margins[i] + b);
    if (m > 0) hinge += m;
  }
  return 0.5 * (w.squaredNorm() + b * b) + p.c * hinge;
}

// Hinge dual, bias as an augmented constant-1 feature (Algorithm 3 of
// Hsieh et al., ICML 2008, L1-loss case, without shrinking so that the
// epoch structure stays deterministic).
LinearClassifier solve_dual_cd(const DenseProblem& p, const TrainOptions& opts,
                               TrainDiagnostics* diag) {
  const auto n = p.x.rows();
  const auto d = p.x.cols();
  const double c = p.c;

  Vecd qd(n);
  for (Eigen::Index i = 0; i < n; ++i) qd[i] = p.x.row(i).squaredNorm() + 1.0;

  Vecd alpha = Vecd::Zero(n);
  Vecd w = Vecd::Zero(d);
  double b = 0.0;

  // The dual objective decreases monotonically under coordinate descent but
  // the primal of the reconstructed w can wiggle near convergence, so the
  // returned classifier is the epoch snapshot with the lowest primal.
  Vecd w_best = w;
  double b_best = b;
  double primal_best = primal_objective(p, w, b);

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng rng(opts.seed);

  double alpha_min = 0.0, alpha_max = 0.0;
  bool converged = false;
  int epoch = 0;
  for (; epoch < opts.max_epochs; ++epoch) {
    rng.shuffle(order);
    double max_update = 0.0;
    for (Eigen::Index i : order) {
      const double yi = p.y[static_cast<std::size_t>(i)];
      const double g = yi * (p.x.row(i).dot(w) + b) - 1.0;
      const double a_old = alpha[i];
      if ((a_old == 0.0 && g >= 0.0) || (a_old == c && g <= 0.0)) continue;
      const double a_new = std::clamp(a_old - g / qd[i], 0.0, c);
      const double delta = a_new - a_old;
      if (delta == 0.0) continue;
      alpha[i] = a_new;
      w.noalias() += (delta * yi) * p.x.row(i).transpose();
      b += delta * yi;
      max_update = std::max(max_update, std::abs(delta));
      alpha_min = std::min(alpha_min, a_new);
      alpha_max = std::max(alpha_max, a_new);
    }
    double primal = primal_objective(p, w, b);
    if (primal < primal_best) {
      primal_best = primal;
      w_best = w;
      b_best = b;
    }
    if (diag) {
      diag->primal.push_back(primal_best);
      diag->dual.push_back(0.5 * (w.squaredNorm() + b * b) - alpha.sum());
    }
    if (max_update < opts.tol) {
      converged = true;
      ++epoch;
      break;
    }
  }
  if (diag) {
    diag->alpha_min = alpha_min;
    diag->alpha_max = alpha_max;
    diag->epochs = epoch;
    diag->converged = converged;
  }

  LinearClassifier clf;
  clf.weights = w_best.cast<float>();
  clf.bias = static_cast<float>(b_best);
  return clf;
}

}  // namespace

LinearClassifier train_binary(const BinaryProblem& problem, const TrainOptions& opts,
                              TrainDiagnostics* diag) {
  problem.validate();
  if (opts.tol <= 0) throw std::invalid_argument("tol must be > 0");
  if (opts.max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
  if (!problem.features.allFinite())
    throw std::runtime_error("non-finite feature values in training data");
  Matd x = problem.features.cast<double>();
  return solve_dual_cd({x, problem.labels, problem.penalty_c}, opts, diag);
}

std::vector<int> phase_labels(std::int64_t n, std::int64_t tau) {
  if (tau < 2) throw std::invalid_argument("period must be >= 2");
  if (n < tau) throw std::invalid_argument("need n >= tau so every phase has an example");
  std::vector<int> phases(static_cast<std::size_t>(n));
  for (std::int64_t i = 1; i <= n; ++i) phases[static_cast<std::size_t>(i - 1)] = phase_of(i, tau);
  return phases;
}

Vecd PhaseClassifierBank::decision_values(const Eigen::Ref<const Vecf>& x) const {
  if (x.size() != weights.cols()) throw std::invalid_argument("query dimension mismatch");
  if (weights_d_.rows() != weights.rows()) {
    // Fallback for banks assembled by hand in tests.
    return weights.cast<double>() * x.cast<double>().matrix() + biases.cast<double>();
  }
  return weights_d_ * x.cast<double>().matrix() + biases_d_;
}

void PhaseClassifierBank::build_cache() {
  weights_d_ = weights.cast<double>();
  biases_d_ = biases.cast<double>();
}

PhaseMatch decide_phase_from_values(const Vecd& values) {
  int best = 0;
  for (int j = 1; j < values.size(); ++j)
    if (values[j] > values[best]) best = j;
  return {best + 1, values[best]};
}

PhaseMatch decide_phase(const PhaseClassifierBank& bank, const Eigen::Ref<const Vecf>& x) {
  return decide_phase_from_values(bank.decision_values(x));
}

PhaseClassifierBank train_bank(const Eigen::Ref<const Matf>& features,
                               const std::vector<PlaceIndex>& places, std::int64_t period,
                               const TrainOptions& opts) {
  const auto rows = features.rows();
  if (period < 2) throw std::invalid_argument("period must be >= 2");
  if (static_cast<Eigen::Index>(places.size()) != rows)
    throw std::invalid_argument("place index count does not match feature rows");
  if (!features.allFinite()) throw std::runtime_error("non-finite feature values in training data");

  std::vector<std::int64_t> positives(static_cast<std::size_t>(period), 0);
  for (auto p : places) {
    if (p < 1) throw std::invalid_argument("place indices are 1-based");
    ++positives[static_cast<std::size_t>((p % period))];
  }
  for (std::int64_t j = 0; j < period; ++j)
    if (positives[static_cast<std::size_t>(j)] == 0)
      throw std::invalid_argument("phase " + std::to_string(j + 1) + " of period " +
                                  std::to_string(period) +
                                  " has zero positive examples (N < tau?)");
  if (rows < 2 * period)
    std::cerr << "[sublinmap] warning: only " << rows << " training rows for period " << period
              << " (< 2*tau recommended)\n";

  const double c = opts.penalty_c > 0 ? opts.penalty_c : default_penalty(rows);
  Matd x = features.cast<double>();

  std::vector<LinearClassifier> classifiers(static_cast<std::size_t>(period));
  parallel_for(static_cast<std::size_t>(period), opts.threads, [&](std::size_t j) {
    std::vector<std::int8_t> labels(static_cast<std::size_t>(rows));
    for (Eigen::Index i = 0; i < rows; ++i)
      labels[static_cast<std::size_t>(i)] =
          phase_of(places[static_cast<std::size_t>(i)], period) == static_cast<int>(j) + 1 ? 1
                                                                                           : -1;
    TrainOptions sub = opts;
    sub.seed = derive_seed(opts.seed, static_cast<std::uint64_t>(period), j + 1);
    classifiers[j] = solve_dual_cd({x, labels, c}, sub, nullptr);
  });

  PhaseClassifierBank bank;
  bank.period = static_cast<int>(period);
  bank.weights.resize(period, features.cols());
  bank.biases.resize(period);
  for (std::int64_t j = 0; j < period; ++j) {
    bank.weights.row(j) = classifiers[static_cast<std::size_t>(j)].weights.transpose();
    bank.biases[j] = classifiers[static_cast<std::size_t>(j)].bias;
  }
  bank.build_cache();

  // Recount with the quantized weights; stored as f32 so that the value
  // survives serialization exactly.
  std::int64_t mistakes = 0;
  for (Eigen::Index i = 0; i < rows; ++i) {
    PhaseMatch m = decide_phase(bank, features.row(i).transpose());
    if (m.phase != phase_of(places[static_cast<std::size_t>(i)], period)) ++mistakes;
  }
  bank.training_error = static_cast<double>(
      static_cast<float>(static_cast<double>(mistakes) / static_cast<double>(rows)));
  return bank;
}

PhaseClassifierBank train_bank(const FrameDatabase& db, std::int64_t period,
                               const TrainOptions& opts) {
  std::vector<PlaceIndex> places(static_cast<std::size_t>(db.n));
  std::iota(places.begin(), places.end(), PlaceIndex{1});
  return train_bank(db.features, places, period, opts);
}

void save_bank(const PhaseClassifierBank& bank, std::ostream& out) {
  io::write_magic(out, kBankMagic);
  io::write_le<std::uint16_t>(out, kBankFormatVersion);
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(bank.period));
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(bank.weights.cols()));
  for (Eigen::Index j = 0; j < bank.weights.rows(); ++j) {
    for (Eigen::Index c = 0; c < bank.weights.cols(); ++c) io::write_f32(out, bank.weights(j, c));
    io::write_f32(out, bank.biases[j]);
  }
  io::write_f32(out, static_cast<float>(bank.training_error));
}

PhaseClassifierBank load_bank(std::istream& in) {
  io::expect_magic(in, kBankMagic, "bank");
  auto version = io::read_le<std::uint16_t>(in);
  if (version != kBankFormatVersion)
    throw std::runtime_error("unsupported SLMB version " + std::to_string(version));
  auto tau = io::read_le<std::uint32_t>(in);
  auto d = io::read_le<std::uint32_t>(in);
  if (tau < 2) throw std::runtime_error("corrupt bank file: period < 2");
  PhaseClassifierBank bank;
  bank.period = static_cast<int>(tau);
  bank.weights.resize(tau, d);
  bank.biases.resize(tau);
  for (std::uint32_t j = 0; j < tau; ++j) {
    for (std::uint32_t c = 0; c < d; ++c) bank.weights(j, c) = io::read_f32(in);
    bank.biases[j] = io::read_f32(in);
  }
  bank.training_error = static_cast<double>(io::read_f32(in));
  bank.build_cache();
  return bank;
}

}  // namespace sublinmap
