#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sublinmap/codec.hpp"
#include "sublinmap/types.hpp"

namespace sublinmap {

enum class QueryStatus { matched, rejected_outlier, ambiguous, no_consensus };

std::string status_name(QueryStatus s);

struct QueryResult {
  QueryStatus status = QueryStatus::no_consensus;
  PlaceIndex index = 0;  // valid when matched
  std::vector<PhaseMatch> phases;
  std::int64_t candidates_examined = 0;
  bool fallback_used = false;
};

/// All i in [1, n] with i mod tau = j - 1, ascending.
std::vector<PlaceIndex> candidate_set(int phase, std::int64_t period, std::int64_t n);

/// Exact multi-way intersection of strictly ascending lists by linear merge.
std::vector<PlaceIndex> intersect(const std::vector<std::vector<PlaceIndex>>& sets);

struct LocalizeOptions {
  bool fallback = false;  // resolve empty intersections by residue score sum
  bool reject = true;     // honor the calibrated rejection threshold
};

/// Decodes the r phases, rejects the query when every winning value falls
/// below the threshold, then reconstructs the index by intersection.
QueryResult localize(const MapCode& code, const Eigen::Ref<const Vecf>& x,
                     const LocalizeOptions& opts = {});

/// argmax over i in [1, n] of the summed per-bank decision values of the
/// phases i induces; ties to the smallest i. O(N) lookups on the already
/// evaluated scores.
PlaceIndex fallback_resolve(const std::vector<Vecd>& phase_scores,
                            const std::vector<std::int64_t>& periods, std::int64_t n);

}  // namespace sublinmap
