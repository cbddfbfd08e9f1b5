#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sublinmap/dataset.hpp"
#include "sublinmap/periods.hpp"
#include "sublinmap/svm.hpp"
#include "sublinmap/types.hpp"

namespace sublinmap {

/// The compressed map: r phase classifier banks plus query-side metadata.
/// Immutable once built.
struct MapCode {
  std::int64_t n = 0;
  int d = 0;  // dimension of raw query vectors (pre-projection when LDA is set)
  std::vector<PhaseClassifierBank> patterns;
  PeriodSet periods;

  bool has_threshold = false;
  float rejection_threshold = 0.0f;

  Matf lda_projection;  // d x bank_dim; empty when no reduction
  std::string provenance_json;

  int bank_dim() const { return patterns.empty() ? d : patterns.front().dim(); }
};

struct StorageReport {
  std::int64_t original_bytes = 0;    // N * d * 4
  std::int64_t compressed_bytes = 0;  // sum(tau) * (d + 1) * 4
  double ratio = 0.0;
  std::int64_t template_count = 0;  // sum(tau)
  int vector_width = 0;             // d + 1
  std::int64_t projection_bytes = 0;  // LDA matrix, accounted separately
};

struct EncodeOptions {
  TrainOptions train;
  // Rejection threshold = min winning decision value over training rows,
  // minus this slack. Calibrated during encode unless disabled.
  double threshold_slack = 0.1;
  bool calibrate_threshold = true;
  std::string provenance_json;  // stored verbatim when non-empty
};

MapCode encode(const FrameDatabase& db, const PeriodSet& periods, const EncodeOptions& opts);
MapCode encode(const MultiSourceDatabase& multi, const PeriodSet& periods,
               const EncodeOptions& opts);

/// Exact byte accounting (file header overhead excluded by design).
StorageReport storage_report(std::int64_t n, int d, std::int64_t sum_tau);
StorageReport storage_report(const MapCode& code);

void save_code(const MapCode& code, const std::string& path);
MapCode load_code(const std::string& path);

}  // namespace sublinmap
