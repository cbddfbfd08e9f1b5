#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sublinmap/svm.hpp"
#include "sublinmap/types.hpp"

namespace sublinmap {

/// A choice of r periods. Valid sets are pairwise co-prime with product
/// (= lcm) >= n_covered, so the residue tuple of any index in [1, N] is
/// unique.
struct PeriodSet {
  std::vector<std::int64_t> periods;
  std::int64_t n_covered = 0;
  std::int64_t level = 0;  // minimum allowed period; 0 when none imposed

  std::int64_t sum() const;
  int r() const { return static_cast<int>(periods.size()); }
};

struct PeriodValidity {
  bool valid = false;
  std::int64_t lcm = 0;  // clamped at int64 max on overflow
  std::vector<std::pair<std::int64_t, std::int64_t>> non_coprime_pairs;
  std::string reason;
};

/// lcm(periods) >= n decides validity; non-co-prime pairs are reported
/// separately (co-primality is what makes product = lcm, it is not itself
/// required for uniqueness).
PeriodValidity validate(const std::vector<std::int64_t>& periods, std::int64_t n);

/// Exact r=2 scanner: over tau1, the smallest tau2 >= 2 co-prime with tau1
/// satisfying tau1*tau2 >= n; minimizes tau1+tau2, ties to the smaller tau1.
PeriodSet min_storage_pair(std::int64_t n);

/// All pairwise co-prime r-tuples from [base, base+window] with product >= n,
/// ordered by sum ascending (then lexicographic). base = ceil(n^(1/r)),
/// raised to ceil(level_multiplier * sqrt(n)) when r = 2 and a level is
/// imposed. window < 0 selects the default 2r + 4.
std::vector<PeriodSet> candidate_periods(std::int64_t n, int r, double level_multiplier = 0.0,
                                         int window = -1);

/// Trains a bank per distinct period across the candidates (cached), scores
/// each tuple by the sum of training errors, and returns the minimizer;
/// ties to the smaller period sum, then lexicographic.
PeriodSet select_by_training_error(const std::vector<PeriodSet>& candidates,
                                   const Eigen::Ref<const Matf>& features,
                                   const std::vector<PlaceIndex>& places,
                                   const TrainOptions& opts,
                                   std::vector<double>* scores = nullptr);
PeriodSet select_by_training_error(const std::vector<PeriodSet>& candidates,
                                   const FrameDatabase& db, const TrainOptions& opts,
                                   std::vector<double>* scores = nullptr);

// Smallest integer b with b^r >= n.
std::int64_t ceil_nth_root(std::int64_t n, int r);

}  // namespace sublinmap
