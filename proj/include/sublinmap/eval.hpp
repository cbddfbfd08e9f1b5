#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sublinmap/codec.hpp"
#include "sublinmap/dataset.hpp"
#include "sublinmap/retrieve.hpp"

namespace sublinmap {

struct EvalConfig {
  int r = 2;
  double level_multiplier = 1.0;
  int window = -1;  // candidate_periods default
  TrainOptions train;
  bool select_by_error = true;  // otherwise the minimum-storage candidate
  std::vector<std::int64_t> fixed_periods;  // non-empty: skip selection entirely
  LocalizeOptions query;
  bool with_timing = false;  // timing never lands in CSV output
};

struct QueryOutcome {
  PlaceIndex query_row = 0;
  QueryStatus status = QueryStatus::no_consensus;
  PlaceIndex index = 0;
  bool fallback_used = false;
  std::vector<double> winning_values;
};

struct EvalReport {
  double accuracy = 0.0;
  StorageReport storage;
  std::vector<double> training_errors;
  std::vector<std::int64_t> periods;

  // Mean per-query seconds, median of 5 single-threaded repetitions.
  // Present only when timing was requested; reported on stderr, not in CSV.
  std::optional<double> seconds_ours;
  std::optional<double> seconds_brute_force;

  // Config echo
  std::string mode;
  std::int64_t n = 0;
  int d = 0;
  int r = 0;
  double level_multiplier = 0.0;
  int sources = 1;
  std::uint64_t seed = 0;

  std::vector<QueryOutcome> outcomes;

  std::int64_t matched_count() const;
};

/// Queries every row of db against the code (fallback disabled); accuracy is
/// the exact-index match rate.
EvalReport self_query_eval(const FrameDatabase& db, const MapCode& code,
                           bool with_timing = false);

/// Encodes the reference sources and queries the held-out source.
EvalReport cross_condition_eval(const MultiSourceDatabase& reference,
                                const FrameDatabase& query_source, const EvalConfig& config);

/// Grid evaluation over r values, period levels, and seeds on synthetic data.
std::vector<EvalReport> sweep(const SyntheticSpec& spec, const std::vector<int>& r_values,
                              const std::vector<double>& level_multipliers,
                              const std::vector<std::uint64_t>& seeds,
                              const EvalConfig& base_config);

struct BruteForceResult {
  std::vector<PlaceIndex> indices;  // nearest reference row per query, 1-based
  double mean_seconds = 0.0;
};

/// Exact nearest neighbor by maximum inner product over the reference rows.
BruteForceResult brute_force_baseline(const FrameDatabase& db,
                                      const Eigen::Ref<const Matf>& queries,
                                      bool with_timing = false);

/// CSV emission. Fixed column order, documented in the README; rows are a
/// deterministic function of config and seed.
void write_report_csv(std::ostream& out, const std::vector<EvalReport>& reports,
                      const std::string& config_hash);
void write_outcomes_csv(std::ostream& out, const std::vector<QueryOutcome>& outcomes,
                        const std::string& config_hash);

/// FNV-1a over a canonical config string; embedded in output files.
std::string config_hash(const std::string& canonical);

}  // namespace sublinmap
