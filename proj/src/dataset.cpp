#include "sublinmap/dataset.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "sublinmap/io.hpp"
#include "sublinmap/rng.hpp"

namespace sublinmap {

namespace {

constexpr char kFeatureMagic[5] = "SLMF";

std::string row_msg(const std::string& what, std::int64_t row) {
  return what + " at row " + std::to_string(row);
}

}  // namespace

void l2_normalize_rows(Matf& features) {
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    double norm = features.row(i).cast<double>().norm();
    if (norm == 0.0)
      throw std::invalid_argument(row_msg("cannot L2-normalize zero vector", i + 1));
    features.row(i) = (features.row(i).cast<double>() / norm).cast<float>();
  }
}

void FrameDatabase::validate() const {
  if (n < 1 || d < 1) throw std::invalid_argument("FrameDatabase requires n >= 1 and d >= 1");
  if (features.rows() != n || features.cols() != d)
    throw std::invalid_argument("FrameDatabase shape does not match n x d");
  for (Eigen::Index i = 0; i < features.rows(); ++i) {
    if (!features.row(i).allFinite())
      throw std::invalid_argument(row_msg("non-finite feature value", i + 1));
    if (l2_normalized) {
      double norm = features.row(i).cast<double>().norm();
      if (std::abs(norm - 1.0) > 1e-6)
        throw std::invalid_argument(row_msg("row norm outside 1 +/- 1e-6", i + 1));
    }
  }
}

void MultiSourceDatabase::validate() const {
  if (sources.empty()) throw std::invalid_argument("MultiSourceDatabase requires >= 1 source");
  for (const auto& s : sources) {
    s.validate();
    if (s.n != sources.front().n || s.d != sources.front().d)
      throw std::invalid_argument("all sources must share (n, d)");
  }
}

namespace {

FrameDatabase load_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  io::expect_magic(in, kFeatureMagic, "feature");
  auto version = io::read_le<std::uint16_t>(in);
  if (version != kFeatureFormatVersion)
    throw std::runtime_error("unsupported SLMF version " + std::to_string(version));
  auto n = io::read_le<std::uint64_t>(in);
  auto d = io::read_le<std::uint32_t>(in);
  if (n < 1 || d < 1) throw std::runtime_error("malformed SLMF header: empty matrix");

  FrameDatabase db;
  db.n = static_cast<std::int64_t>(n);
  db.d = static_cast<int>(d);
  db.features.resize(db.n, db.d);
  for (std::int64_t i = 0; i < db.n; ++i) {
    for (int c = 0; c < db.d; ++c) {
      float v;
      try {
        v = io::read_f32(in);
      } catch (const std::runtime_error&) {
        throw std::runtime_error(row_msg("truncated SLMF payload", i + 1));
      }
      if (!std::isfinite(v)) throw std::runtime_error(row_msg("non-finite feature value", i + 1));
      db.features(i, c) = v;
    }
  }
  return db;
}

FrameDatabase load_csv(const std::string& path, bool skip_id_column) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);

  std::vector<std::vector<float>> rows;
  std::string line;
  std::int64_t lineno = 0;
  Eigen::Index width = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<float> row;
    std::stringstream ss(line);
    std::string cell;
    bool first = true;
    while (std::getline(ss, cell, ',')) {
      if (first && skip_id_column) {
        first = false;
        continue;
      }
      first = false;
      std::size_t pos = 0;
      double v;
      try {
        v = std::stod(cell, &pos);
      } catch (const std::exception&) {
        throw std::runtime_error(row_msg("unparsable value '" + cell + "'", lineno));
      }
      while (pos < cell.size() && std::isspace(static_cast<unsigned char>(cell[pos]))) ++pos;
      if (pos != cell.size())
        throw std::runtime_error(row_msg("unparsable value '" + cell + "'", lineno));
      if (!std::isfinite(v)) throw std::runtime_error(row_msg("non-finite feature value", lineno));
      row.push_back(static_cast<float>(v));
    }
    if (width < 0) width = static_cast<Eigen::Index>(row.size());
    if (static_cast<Eigen::Index>(row.size()) != width)
      throw std::runtime_error(row_msg("ragged CSV row", lineno));
    rows.push_back(std::move(row));
  }
  if (rows.empty() || width < 1) throw std::runtime_error("empty CSV feature file " + path);

  FrameDatabase db;
  db.n = static_cast<std::int64_t>(rows.size());
  db.d = static_cast<int>(width);
  db.features.resize(db.n, db.d);
  for (std::int64_t i = 0; i < db.n; ++i)
    for (int c = 0; c < db.d; ++c) db.features(i, c) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
  return db;
}

}  // namespace

FrameDatabase load_features(const std::string& path, FeatureFormat format,
                            const LoadOptions& opts) {
  FrameDatabase db = format == FeatureFormat::binary ? load_binary(path)
                                                     : load_csv(path, opts.skip_id_column);
  db.source_id = path;
  if (opts.normalize) {
    l2_normalize_rows(db.features);
    db.l2_normalized = true;
  }
  db.validate();
  return db;
}

void save_features(const FrameDatabase& db, const std::string& path, FeatureFormat format) {
  db.validate();
  if (format == FeatureFormat::binary) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    io::write_magic(out, kFeatureMagic);
    io::write_le<std::uint16_t>(out, kFeatureFormatVersion);
    io::write_le<std::uint64_t>(out, static_cast<std::uint64_t>(db.n));
    io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(db.d));
    for (std::int64_t i = 0; i < db.n; ++i)
      for (int c = 0; c < db.d; ++c) io::write_f32(out, db.features(i, c));
    if (!out) throw std::runtime_error("write failed for " + path);
  } else {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    char buf[64];
    for (std::int64_t i = 0; i < db.n; ++i) {
      for (int c = 0; c < db.d; ++c) {
        std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(db.features(i, c)));
        out << (c ? "," : "") << buf;
      }
      out << '\n';
    }
    if (!out) throw std::runtime_error("write failed for " + path);
  }
}

FrameDatabase synthesize(const SyntheticSpec& spec) {
  if (spec.n < 1 || spec.d < 1) throw std::invalid_argument("synthesize requires n >= 1, d >= 1");
  if (spec.strength <= 0) throw std::invalid_argument("phase_signal_strength must be > 0");
  if (spec.sigma < 0) throw std::invalid_argument("noise_sigma must be >= 0");
  std::int64_t total = 0;
  for (auto tau : spec.planted_periods) {
    if (tau < 1) throw std::invalid_argument("planted periods must be >= 1");
    total += tau;
  }
  if (total > spec.d)
    throw std::invalid_argument("planted period blocks exceed feature dimension (" +
                                std::to_string(total) + " > " + std::to_string(spec.d) + ")");

  FrameDatabase db;
  db.n = spec.n;
  db.d = spec.d;
  db.source_id = "synthetic";
  Matd raw = Matd::Zero(spec.n, spec.d);
  for (std::int64_t i = 1; i <= spec.n; ++i) {
    std::int64_t offset = 0;
    for (auto tau : spec.planted_periods) {
      raw(i - 1, offset + (i - 1) % tau) = spec.strength;
      offset += tau;
    }
  }
  if (spec.sigma > 0) {
    Rng rng(spec.seed);
    for (std::int64_t i = 0; i < spec.n; ++i)
      for (int c = 0; c < spec.d; ++c) raw(i, c) += spec.sigma * rng.normal();
  }
  db.features = raw.cast<float>();
  l2_normalize_rows(db.features);
  db.l2_normalized = true;
  db.validate();
  return db;
}

AugmentKind parse_augment_kind(const std::string& name) {
  if (name == "gaussian_noise") return AugmentKind::gaussian_noise;
  if (name == "coordinate_dropout") return AugmentKind::coordinate_dropout;
  if (name == "scaling_jitter") return AugmentKind::scaling_jitter;
  throw std::invalid_argument("unknown augmentation kind '" + name + "'");
}

std::string augment_kind_name(AugmentKind kind) {
  switch (kind) {
    case AugmentKind::gaussian_noise: return "gaussian_noise";
    case AugmentKind::coordinate_dropout: return "coordinate_dropout";
    case AugmentKind::scaling_jitter: return "scaling_jitter";
  }
  return "?";
}

MultiSourceDatabase augment(const FrameDatabase& db, const std::vector<AugmentKind>& kinds,
                            double magnitude, int copies, std::uint64_t seed) {
  db.validate();
  if (copies < 1) throw std::invalid_argument("copies must be >= 1");
  if (magnitude < 0) throw std::invalid_argument("magnitude must be >= 0");
  if (kinds.empty()) throw std::invalid_argument("augment requires a non-empty set of kinds");

  // Canonical application order, independent of the caller's ordering.
  std::vector<AugmentKind> ordered = kinds;
  std::sort(ordered.begin(), ordered.end());
  ordered.erase(std::unique(ordered.begin(), ordered.end()), ordered.end());

  std::string kinds_tag;
  for (auto k : ordered) kinds_tag += (kinds_tag.empty() ? "" : "+") + augment_kind_name(k);

  MultiSourceDatabase multi;
  multi.sources.push_back(db);
  for (int c = 1; c <= copies; ++c) {
    FrameDatabase copy = db;
    copy.source_id = db.source_id + "/" + kinds_tag + "#" + std::to_string(c);
    if (magnitude > 0) {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
      // Each copy is one appearance condition: the dropout mask and the
      // per-coordinate gains are drawn once and shared by all rows, the way
      // a season or time of day affects every frame alike. Additive noise
      // stays per-element (sensor noise).
      std::vector<bool> dropped(static_cast<std::size_t>(db.d), false);
      Vecd gains = Vecd::Ones(db.d);
      for (auto kind : ordered) {
        if (kind == AugmentKind::coordinate_dropout) {
          double p = std::min(magnitude, 1.0);
          for (int j = 0; j < db.d; ++j) dropped[static_cast<std::size_t>(j)] = rng.uniform() < p;
        } else if (kind == AugmentKind::scaling_jitter) {
          for (int j = 0; j < db.d; ++j) gains[j] = 1.0 + magnitude * (2.0 * rng.uniform() - 1.0);
        }
      }
      bool add_noise =
          std::find(ordered.begin(), ordered.end(), AugmentKind::gaussian_noise) != ordered.end();
      for (std::int64_t i = 0; i < db.n; ++i) {
        Vecd row = db.features.row(i).cast<double>();
        if (add_noise)
          for (int j = 0; j < db.d; ++j) row[j] += magnitude * rng.normal();
        for (int j = 0; j < db.d; ++j) {
          if (dropped[static_cast<std::size_t>(j)]) row[j] = 0.0;
          row[j] *= gains[j];
        }
        double norm = row.norm();
        if (norm == 0.0) {
          // Fully dropped row: keep the strongest original coordinate alive
          // so the place stays representable.
          int best;
          db.features.row(i).cwiseAbs().maxCoeff(&best);
          row[best] = db.features(i, best);
          norm = row.norm();
        }
        copy.features.row(i) = (row / norm).cast<float>();
      }
      copy.l2_normalized = true;
    }
    multi.sources.push_back(std::move(copy));
  }
  multi.validate();
  return multi;
}

MultiSourceDatabase lda_reduce(const MultiSourceDatabase& multi, int out_dim, double epsilon) {
  multi.validate();
  const std::int64_t n = multi.places();
  const int d = multi.dim();
  const auto s = static_cast<std::int64_t>(multi.sources.size());
  if (s < 2)
    throw std::invalid_argument("lda_reduce requires >= 2 exemplars per place (>= 2 sources)");
  if (out_dim < 1 || out_dim >= d) throw std::invalid_argument("out_dim must be in [1, d)");
  if (out_dim > n - 1) throw std::invalid_argument("out_dim must be <= n - 1");

  // Class = place; exemplars = the same row index across sources.
  Matd class_means = Matd::Zero(n, d);
  for (const auto& src : multi.sources) class_means += src.features.cast<double>();
  class_means /= static_cast<double>(s);
  Vecd global_mean = class_means.colwise().mean().transpose();

  Eigen::MatrixXd sw = Eigen::MatrixXd::Zero(d, d);
  for (const auto& src : multi.sources) {
    Matd centered = src.features.cast<double>() - class_means;
    sw.noalias() += centered.transpose() * centered;
  }
  Eigen::MatrixXd sb = Eigen::MatrixXd::Zero(d, d);
  {
    Matd mc = class_means.rowwise() - global_mean.transpose();
    sb.noalias() = static_cast<double>(s) * (mc.transpose() * mc);
  }

  double eps = epsilon < 0 ? 1e-4 * sw.trace() / d : epsilon;
  Eigen::MatrixXd regularized = sw + eps * Eigen::MatrixXd::Identity(d, d);
  if (regularized.diagonal().minCoeff() <= 0.0)
    throw std::runtime_error(
        "within-class scatter is singular; pass a larger epsilon to lda_reduce");

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(sb, regularized);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error(
        "generalized eigensolve failed on singular scatter; pass a larger epsilon to lda_reduce");

  // Eigenvalues come out ascending; keep the trailing out_dim columns,
  // largest first, with a deterministic sign convention.
  Eigen::MatrixXd projection(d, out_dim);
  for (int k = 0; k < out_dim; ++k) {
    Eigen::VectorXd v = solver.eigenvectors().col(d - 1 - k);
    int imax;
    v.cwiseAbs().maxCoeff(&imax);
    if (v[imax] < 0) v = -v;
    projection.col(k) = v;
  }

  MultiSourceDatabase reduced;
  reduced.original_dim = d;
  reduced.lda_projection = projection.cast<float>();
  for (const auto& src : multi.sources) {
    FrameDatabase p;
    p.n = src.n;
    p.d = out_dim;
    p.source_id = src.source_id + "/lda" + std::to_string(out_dim);
    p.features = (src.features.cast<double>() * projection).cast<float>();
    p.l2_normalized = false;
    p.validate();
    reduced.sources.push_back(std::move(p));
  }
  return reduced;
}

}  // namespace sublinmap
