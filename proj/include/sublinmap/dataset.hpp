#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sublinmap/types.hpp"

namespace sublinmap {

/// An ordered collection of N feature vectors of dimension d; row i-1 of
/// `features` is frame i (frame indices are 1-based everywhere).
/// Values are stored as f32, matching the binary file format, so a
/// write/read round trip is bit-exact.
struct FrameDatabase {
  std::int64_t n = 0;
  int d = 0;
  Matf features;
  std::string source_id;
  bool l2_normalized = false;

  // Throws std::invalid_argument on shape mismatch, non-finite entries,
  // or (when l2_normalized) a row norm outside [1 - 1e-6, 1 + 1e-6].
  void validate() const;
};

/// Aligned appearance conditions: row i of every source depicts place i.
struct MultiSourceDatabase {
  std::vector<FrameDatabase> sources;

  // Set by lda_reduce: original-space d x out_dim projection, applied to
  // queries before phase decoding. Empty when no reduction was performed.
  Matf lda_projection;
  int original_dim = 0;

  std::int64_t places() const { return sources.empty() ? 0 : sources.front().n; }
  int dim() const { return sources.empty() ? 0 : sources.front().d; }
  void validate() const;
};

/// Desk-scale stand-in for extracted visual features: each planted period tau
/// owns a block of tau coordinates carrying a one-hot encoding of
/// (i - 1) mod tau, scaled by `strength`; Gaussian noise of std `sigma` is
/// added everywhere; rows are then L2-normalized.
struct SyntheticSpec {
  std::int64_t n = 0;
  int d = 0;
  std::vector<std::int64_t> planted_periods;
  double strength = 1.0;
  double sigma = 0.0;
  std::uint64_t seed = 0;
};

enum class FeatureFormat { binary, csv };

struct LoadOptions {
  bool normalize = false;       // L2-normalize rows after reading
  bool skip_id_column = false;  // CSV only: ignore a leading id column
};

FrameDatabase load_features(const std::string& path, FeatureFormat format,
                            const LoadOptions& opts = {});
void save_features(const FrameDatabase& db, const std::string& path, FeatureFormat format);

FrameDatabase synthesize(const SyntheticSpec& spec);

enum class AugmentKind { gaussian_noise, coordinate_dropout, scaling_jitter };

AugmentKind parse_augment_kind(const std::string& name);
std::string augment_kind_name(AugmentKind kind);

/// Original plus `copies` perturbed sources; every kind in `kinds` is applied
/// to each copy, then rows are re-normalized. Place alignment is preserved.
MultiSourceDatabase augment(const FrameDatabase& db, const std::vector<AugmentKind>& kinds,
                            double magnitude, int copies, std::uint64_t seed);

/// Supervised reduction to out_dim via the top generalized eigenvectors of
/// (S_w + eps*I)^-1 S_b with classes = places and exemplars = the same row
/// across sources. eps < 0 selects the default 1e-4 * trace(S_w) / d.
MultiSourceDatabase lda_reduce(const MultiSourceDatabase& multi, int out_dim,
                               double epsilon = -1.0);

/// In-place row L2 normalization; throws on a zero row (names the row).
void l2_normalize_rows(Matf& features);

}  // namespace sublinmap
