#include "sublinmap/codec.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "sublinmap/io.hpp"

namespace sublinmap {

namespace {

constexpr char kMapMagic[5] = "SLMC";

MapCode encode_rows(const Eigen::Ref<const Matf>& rows, const std::vector<PlaceIndex>& places,
                    std::int64_t n, int raw_dim, const Matf& lda_projection,
                    const PeriodSet& periods, const EncodeOptions& opts) {
  PeriodValidity validity = validate(periods.periods, n);
  if (!validity.valid)
    throw std::invalid_argument("invalid period set for n=" + std::to_string(n) + ": " +
                                validity.reason);
  for (auto tau : periods.periods)
    if (tau > n)
      throw std::invalid_argument("period " + std::to_string(tau) +
                                  " exceeds n; some phase would have no example");

  MapCode code;
  code.n = n;
  code.d = raw_dim;
  code.periods = periods;
  code.lda_projection = lda_projection;
  code.provenance_json = opts.provenance_json;
  for (auto tau : periods.periods)
    code.patterns.push_back(train_bank(rows, places, tau, opts.train));

  if (opts.calibrate_threshold) {
    // Lower bound for outlier screening: the smallest winning decision value
    // any training row achieves in any bank, minus the slack.
    double min_winning = std::numeric_limits<double>::infinity();
    for (const auto& bank : code.patterns)
      for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        PhaseMatch m = decide_phase(bank, rows.row(i).transpose());
        min_winning = std::min(min_winning, m.value);
      }
    code.has_threshold = true;
    code.rejection_threshold = static_cast<float>(min_winning - opts.threshold_slack);
  }
  return code;
}

}  // namespace

MapCode encode(const FrameDatabase& db, const PeriodSet& periods, const EncodeOptions& opts) {
  db.validate();
  std::vector<PlaceIndex> places(static_cast<std::size_t>(db.n));
  std::iota(places.begin(), places.end(), PlaceIndex{1});
  return encode_rows(db.features, places, db.n, db.d, Matf(), periods, opts);
}

MapCode encode(const MultiSourceDatabase& multi, const PeriodSet& periods,
               const EncodeOptions& opts) {
  multi.validate();
  const std::int64_t n = multi.places();
  const int d = multi.dim();
  const auto s = static_cast<std::int64_t>(multi.sources.size());

  // Shared-space multi-exemplar training: stack the sources; every exemplar
  // of place i carries the phase labels of i.
  Matf rows(n * s, d);
  std::vector<PlaceIndex> places(static_cast<std::size_t>(n * s));
  for (std::int64_t k = 0; k < s; ++k) {
    rows.middleRows(k * n, n) = multi.sources[static_cast<std::size_t>(k)].features;
    for (std::int64_t i = 0; i < n; ++i)
      places[static_cast<std::size_t>(k * n + i)] = i + 1;
  }

  int raw_dim = multi.lda_projection.size() > 0 ? multi.original_dim : d;
  return encode_rows(rows, places, n, raw_dim, multi.lda_projection, periods, opts);
}

StorageReport storage_report(std::int64_t n, int d, std::int64_t sum_tau) {
  StorageReport rep;
  rep.template_count = sum_tau;
  rep.vector_width = d + 1;
  rep.original_bytes = n * static_cast<std::int64_t>(d) * 4;
  rep.compressed_bytes = sum_tau * static_cast<std::int64_t>(d + 1) * 4;
  rep.ratio = rep.original_bytes > 0
                  ? static_cast<double>(rep.compressed_bytes) / static_cast<double>(rep.original_bytes)
                  : 0.0;
  return rep;
}

StorageReport storage_report(const MapCode& code) {
  StorageReport rep = storage_report(code.n, code.bank_dim(), code.periods.sum());
  // The raw features being compressed have the pre-projection width.
  rep.original_bytes = code.n * static_cast<std::int64_t>(code.d) * 4;
  rep.ratio = rep.original_bytes > 0
                  ? static_cast<double>(rep.compressed_bytes) / static_cast<double>(rep.original_bytes)
                  : 0.0;
  rep.projection_bytes = static_cast<std::int64_t>(code.lda_projection.size()) * 4;
  return rep;
}

void save_code(const MapCode& code, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  io::write_magic(out, kMapMagic);
  io::write_le<std::uint16_t>(out, kMapFormatVersion);
  io::write_le<std::uint64_t>(out, static_cast<std::uint64_t>(code.n));
  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(code.d));
  io::write_le<std::uint16_t>(out, static_cast<std::uint16_t>(code.patterns.size()));

  io::write_le<std::uint8_t>(out, code.lda_projection.size() > 0 ? 1 : 0);
  if (code.lda_projection.size() > 0) {
    io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(code.lda_projection.rows()));
    io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(code.lda_projection.cols()));
    for (Eigen::Index i = 0; i < code.lda_projection.rows(); ++i)
      for (Eigen::Index j = 0; j < code.lda_projection.cols(); ++j)
        io::write_f32(out, code.lda_projection(i, j));
  }

  io::write_le<std::uint8_t>(out, code.has_threshold ? 1 : 0);
  if (code.has_threshold) io::write_f32(out, code.rejection_threshold);

  for (const auto& bank : code.patterns) save_bank(bank, out);

  io::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(code.provenance_json.size()));
  out.write(code.provenance_json.data(),
            static_cast<std::streamsize>(code.provenance_json.size()));
  if (!out) throw std::runtime_error("write failed for " + path);
}

MapCode load_code(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  io::expect_magic(in, kMapMagic, "map");
  auto version = io::read_le<std::uint16_t>(in);
  if (version != kMapFormatVersion)
    throw std::runtime_error("unsupported SLMC version " + std::to_string(version));

  MapCode code;
  code.n = static_cast<std::int64_t>(io::read_le<std::uint64_t>(in));
  code.d = static_cast<int>(io::read_le<std::uint32_t>(in));
  auto r = io::read_le<std::uint16_t>(in);

  if (io::read_le<std::uint8_t>(in)) {
    auto rows = io::read_le<std::uint32_t>(in);
    auto cols = io::read_le<std::uint32_t>(in);
    code.lda_projection.resize(rows, cols);
    for (std::uint32_t i = 0; i < rows; ++i)
      for (std::uint32_t j = 0; j < cols; ++j) code.lda_projection(i, j) = io::read_f32(in);
  }

  if (io::read_le<std::uint8_t>(in)) {
    code.has_threshold = true;
    code.rejection_threshold = io::read_f32(in);
  }

  try {
    for (std::uint16_t k = 0; k < r; ++k) code.patterns.push_back(load_bank(in));
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(std::string("corrupt map file: ") + e.what());
  }

  auto prov_len = io::read_le<std::uint32_t>(in);
  code.provenance_json.resize(prov_len);
  in.read(code.provenance_json.data(), prov_len);
  if (!in) throw std::runtime_error("corrupt map file: truncated provenance");

  code.periods.n_covered = code.n;
  for (const auto& bank : code.patterns) code.periods.periods.push_back(bank.period);
  PeriodValidity validity = validate(code.periods.periods, code.n);
  if (!validity.valid)
    throw std::runtime_error("corrupt map file: stored periods invalid (" + validity.reason + ")");
  return code;
}

}  // namespace sublinmap
