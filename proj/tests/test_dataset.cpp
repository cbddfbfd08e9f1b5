#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "sublinmap/dataset.hpp"
#include "sublinmap/rng.hpp"
#include "sublinmap/svm.hpp"

using namespace sublinmap;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("sublinmap_test_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

FrameDatabase random_db(std::uint64_t seed, std::int64_t n, int d) {
  Rng rng(seed);
  FrameDatabase db;
  db.n = n;
  db.d = d;
  db.features.resize(n, d);
  for (std::int64_t i = 0; i < n; ++i)
    for (int c = 0; c < d; ++c) db.features(i, c) = static_cast<float>(rng.normal());
  return db;
}

}  // namespace

TEST_CASE("binary feature files round-trip bit-exactly") {
  TempDir tmp;
  Rng rng(12);
  for (int trial = 0; trial < 5; ++trial) {
    auto n = static_cast<std::int64_t>(rng.below(40)) + 1;
    int d = static_cast<int>(rng.below(16)) + 1;
    FrameDatabase db = random_db(rng.next(), n, d);
    std::string path = tmp.file("roundtrip.slmf");
    save_features(db, path, FeatureFormat::binary);
    FrameDatabase back = load_features(path, FeatureFormat::binary);
    REQUIRE(back.n == db.n);
    REQUIRE(back.d == db.d);
    REQUIRE(std::memcmp(back.features.data(), db.features.data(),
                        sizeof(float) * static_cast<std::size_t>(db.n * db.d)) == 0);
  }
}

TEST_CASE("binary identity read-back") {
  TempDir tmp;
  FrameDatabase db;
  db.n = 3;
  db.d = 2;
  db.features.resize(3, 2);
  db.features << 1, 0, 0, 1, 0.6f, 0.8f;
  std::string path = tmp.file("tiny.slmf");
  save_features(db, path, FeatureFormat::binary);
  FrameDatabase back = load_features(path, FeatureFormat::binary);
  CHECK(back.n == 3);
  CHECK(back.d == 2);
  CHECK(back.features(2, 0) == 0.6f);
  CHECK(back.features(2, 1) == 0.8f);
}

TEST_CASE("binary loader rejects malformed files") {
  TempDir tmp;
  std::string path = tmp.file("bad.slmf");
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOPE";
  }
  CHECK_THROWS_WITH_AS(load_features(path, FeatureFormat::binary).validate(),
                       doctest::Contains("bad magic"), std::runtime_error);

  FrameDatabase db = random_db(5, 4, 3);
  std::string good = tmp.file("good.slmf");
  save_features(db, good, FeatureFormat::binary);
  // Truncate the payload.
  fs::resize_file(good, fs::file_size(good) - 5);
  CHECK_THROWS_WITH_AS(load_features(good, FeatureFormat::binary).validate(),
                       doctest::Contains("row 4"), std::runtime_error);
}

TEST_CASE("csv loader") {
  TempDir tmp;
  std::string path = tmp.file("f.csv");
  {
    std::ofstream out(path);
    out << "1.0,2.0\n3.0,4.0\n";
  }
  FrameDatabase db = load_features(path, FeatureFormat::csv);
  CHECK(db.n == 2);
  CHECK(db.d == 2);
  CHECK(db.features(1, 1) == 4.0f);

  {
    std::ofstream out(path);
    out << "1.0,2.0\n3.0\n";
  }
  CHECK_THROWS_WITH_AS(load_features(path, FeatureFormat::csv).validate(),
                       doctest::Contains("row 2"), std::runtime_error);

  {
    std::ofstream out(path);
    out << "7,1.0,2.0\n8,3.0,4.0\n";
  }
  LoadOptions opts;
  opts.skip_id_column = true;
  db = load_features(path, FeatureFormat::csv, opts);
  CHECK(db.d == 2);
  CHECK(db.features(0, 0) == 1.0f);

  {
    std::ofstream out(path);
    out << "1.0,nan\n";
  }
  CHECK_THROWS_WITH_AS(load_features(path, FeatureFormat::csv).validate(),
                       doctest::Contains("row 1"), std::runtime_error);

  // CSV save/load reproduces f32 values exactly (printed with %.9g).
  FrameDatabase rnd = random_db(3, 10, 4);
  std::string csv = tmp.file("rt.csv");
  save_features(rnd, csv, FeatureFormat::csv);
  FrameDatabase back = load_features(csv, FeatureFormat::csv);
  REQUIRE(back.n == rnd.n);
  CHECK(back.features == rnd.features);
}

TEST_CASE("load-time normalization") {
  TempDir tmp;
  FrameDatabase db = random_db(21, 8, 5);
  std::string path = tmp.file("norm.slmf");
  save_features(db, path, FeatureFormat::binary);
  LoadOptions opts;
  opts.normalize = true;
  FrameDatabase normed = load_features(path, FeatureFormat::binary, opts);
  CHECK(normed.l2_normalized);
  for (std::int64_t i = 0; i < normed.n; ++i)
    CHECK(std::abs(normed.features.row(i).cast<double>().norm() - 1.0) <= 1e-6);

  // A zero row cannot be normalized; the error names it.
  db.features.row(3).setZero();
  save_features(db, path, FeatureFormat::binary);
  CHECK_THROWS_WITH_AS(load_features(path, FeatureFormat::binary, opts).validate(),
                       doctest::Contains("row 4"), std::invalid_argument);
}

TEST_CASE("synthesize plants one-hot phase blocks") {
  SyntheticSpec spec;
  spec.n = 6;
  spec.d = 7;
  spec.planted_periods = {2, 3};
  spec.strength = 1.0;
  spec.sigma = 0.0;
  FrameDatabase db = synthesize(spec);
  CHECK(db.n == 6);
  CHECK(db.d == 7);

  // Row 1 is hot exactly at the phase-0 offsets of both blocks (0 and 2).
  for (int c = 0; c < 7; ++c) {
    bool hot = c == 0 || c == 2;
    CHECK((db.features(0, c) != 0.0f) == hot);
  }
  CHECK(db.features(0, 0) == db.features(0, 2));  // equal after normalization

  // Periodicity: with lcm(2,3)=6, rows i and i+6 are identical.
  SyntheticSpec ext = spec;
  ext.n = 12;
  FrameDatabase big = synthesize(ext);
  for (std::int64_t i = 0; i < 6; ++i)
    CHECK(big.features.row(i) == big.features.row(i + 6));
}

TEST_CASE("synthesize is deterministic and checks its spec") {
  SyntheticSpec spec;
  spec.n = 20;
  spec.d = 10;
  spec.planted_periods = {3, 4};
  spec.sigma = 0.05;
  spec.seed = 7;
  FrameDatabase a = synthesize(spec);
  FrameDatabase b = synthesize(spec);
  CHECK(a.features == b.features);

  SyntheticSpec other = spec;
  other.seed = 8;
  CHECK(synthesize(other).features != a.features);

  SyntheticSpec bad = spec;
  bad.planted_periods = {6, 5};  // 11 > d = 10
  CHECK_THROWS_AS(synthesize(bad), std::invalid_argument);
  bad = spec;
  bad.strength = 0.0;
  CHECK_THROWS_AS(synthesize(bad), std::invalid_argument);
}

TEST_CASE("augment preserves alignment and counts") {
  SyntheticSpec spec;
  spec.n = 15;
  spec.d = 12;
  spec.planted_periods = {3, 4};
  spec.sigma = 0.01;
  spec.seed = 4;
  FrameDatabase db = synthesize(spec);

  MultiSourceDatabase multi =
      augment(db, {AugmentKind::gaussian_noise}, 0.05, 3, 99);
  CHECK(multi.sources.size() == 4);
  for (const auto& src : multi.sources) {
    CHECK(src.n == db.n);
    CHECK(src.d == db.d);
  }
  CHECK(multi.sources[0].features == db.features);
  CHECK(multi.sources[1].features != db.features);

  // Zero magnitude: perturbed copies equal the original bit-exactly.
  MultiSourceDatabase zero = augment(db, {AugmentKind::scaling_jitter}, 0.0, 2, 99);
  for (const auto& src : zero.sources) CHECK(src.features == db.features);

  // Perturbed rows stay unit-norm.
  for (std::size_t s = 1; s < multi.sources.size(); ++s)
    for (std::int64_t i = 0; i < db.n; ++i)
      CHECK(std::abs(multi.sources[s].features.row(i).cast<double>().norm() - 1.0) <= 1e-6);

  CHECK_THROWS_AS(augment(db, {}, 0.1, 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(augment(db, {AugmentKind::gaussian_noise}, 0.1, 0, 0), std::invalid_argument);
  CHECK_THROWS_AS(augment(db, {AugmentKind::gaussian_noise}, -0.1, 1, 0), std::invalid_argument);

  // Deterministic given seed, and different across copies.
  MultiSourceDatabase again =
      augment(db, {AugmentKind::gaussian_noise}, 0.05, 3, 99);
  for (std::size_t s = 0; s < multi.sources.size(); ++s)
    CHECK(again.sources[s].features == multi.sources[s].features);
  CHECK(multi.sources[1].features != multi.sources[2].features);

  // All three kinds compose.
  MultiSourceDatabase all = augment(
      db, {AugmentKind::gaussian_noise, AugmentKind::coordinate_dropout, AugmentKind::scaling_jitter},
      0.1, 1, 5);
  CHECK(all.sources.size() == 2);
  CHECK(all.sources[1].features != db.features);
}

TEST_CASE("lda_reduce separates well-separated place clusters") {
  // Two sources identical per place; two clusters of 4 places each, far apart.
  Rng rng(31);
  const std::int64_t n = 8;
  const int d = 5;
  Matf x(n, d);
  for (std::int64_t i = 0; i < n; ++i) {
    for (int c = 0; c < d; ++c) x(i, c) = static_cast<float>(0.05 * rng.normal());
    x(i, 0) += i < 4 ? -2.0f : 2.0f;
  }
  FrameDatabase src;
  src.n = n;
  src.d = d;
  src.features = x;
  MultiSourceDatabase multi;
  multi.sources = {src, src};

  // Identical exemplars make S_w exactly zero: the default epsilon (scaled
  // by trace) degenerates, so an explicit epsilon is required.
  CHECK_THROWS_WITH_AS(lda_reduce(multi, 1, 0.0), doctest::Contains("epsilon"),
                       std::runtime_error);

  MultiSourceDatabase reduced = lda_reduce(multi, 1, 1e-6);
  CHECK(reduced.dim() == 1);
  CHECK(reduced.lda_projection.rows() == d);
  CHECK(reduced.original_dim == d);

  // The two clusters are linearly separable with margin in the projected
  // space: verified by training a two-class classifier to zero error.
  Matf projected = reduced.sources[0].features;
  std::vector<std::int8_t> labels;
  for (std::int64_t i = 0; i < n; ++i) labels.push_back(i < 4 ? -1 : 1);
  TrainOptions opts;
  opts.seed = 1;
  LinearClassifier clf = train_binary({projected, labels, 50.0}, opts);
  for (std::int64_t i = 0; i < n; ++i) {
    double margin = labels[static_cast<std::size_t>(i)] * clf.decide(projected.row(i).transpose());
    CHECK(margin > 0.0);
  }
}

TEST_CASE("lda_reduce preserves the ordering of class-mean separations at out_dim = d-1") {
  // Class means in a 4-d subspace (last coordinate ~ 0), isotropic exemplar
  // noise; with out_dim = d-1 the ordering of pairwise mean distances is
  // preserved (brute-force comparison).
  Rng rng(77);
  const std::int64_t n = 10;
  const int d = 5;
  // Collinear means with power-of-two spacing: every pairwise distance is
  // distinct (binary expansions) and the gaps dwarf the whitening noise.
  Matd means = Matd::Zero(n, d);
  for (std::int64_t i = 0; i < n; ++i) means(i, 0) = std::pow(2.0, static_cast<double>(i)) / 8.0;
  MultiSourceDatabase multi;
  for (int s = 0; s < 3; ++s) {
    FrameDatabase src;
    src.n = n;
    src.d = d;
    src.features.resize(n, d);
    for (std::int64_t i = 0; i < n; ++i)
      for (int c = 0; c < d; ++c)
        src.features(i, c) = static_cast<float>(means(i, c) + 0.01 * rng.normal());
    multi.sources.push_back(std::move(src));
  }

  MultiSourceDatabase reduced = lda_reduce(multi, d - 1);

  Matd reduced_means = Matd::Zero(n, d - 1);
  for (const auto& src : reduced.sources) reduced_means += src.features.cast<double>();
  reduced_means /= 3.0;

  auto pair_order = [n](const Matd& m) {
    std::vector<std::pair<double, std::pair<int, int>>> dist;
    for (std::int64_t a = 0; a < n; ++a)
      for (std::int64_t b = a + 1; b < n; ++b)
        dist.push_back({(m.row(a) - m.row(b)).norm(), {static_cast<int>(a), static_cast<int>(b)}});
    std::sort(dist.begin(), dist.end());
    std::vector<std::pair<int, int>> order;
    for (auto& [_, pair] : dist) order.push_back(pair);
    return order;
  };
  CHECK(pair_order(means) == pair_order(reduced_means));
}

TEST_CASE("lda_reduce preconditions") {
  FrameDatabase src = random_db(1, 6, 4);
  MultiSourceDatabase single;
  single.sources = {src};
  CHECK_THROWS_AS(lda_reduce(single, 2), std::invalid_argument);

  MultiSourceDatabase multi;
  multi.sources = {src, src};
  CHECK_THROWS_AS(lda_reduce(multi, 4), std::invalid_argument);   // out_dim >= d
  CHECK_THROWS_AS(lda_reduce(multi, 6), std::invalid_argument);   // out_dim > n-1
  CHECK_THROWS_AS(lda_reduce(multi, 0), std::invalid_argument);
}
