#include "sublinmap/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "sublinmap/periods.hpp"
#include "sublinmap/rng.hpp"

namespace sublinmap {

namespace {

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string join_i64(const std::vector<std::int64_t>& values, char sep = '|') {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += sep;
    out += std::to_string(values[i]);
  }
  return out;
}

std::string join_doubles(const std::vector<double>& values, char sep = '|') {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += sep;
    out += fmt_double(values[i]);
  }
  return out;
}

// Median over 5 repetitions of 1000 queries each, single-threaded; rows are
// reused cyclically when the batch is smaller.
template <typename Fn>
double median_batch_seconds(std::int64_t batch, Fn&& run_one) {
  const std::int64_t reps = 5;
  const std::int64_t queries = 1000;
  std::vector<double> per_query(reps);
  for (std::int64_t rep = 0; rep < reps; ++rep) {
    auto t0 = std::chrono::steady_clock::now();
    for (std::int64_t q = 0; q < queries; ++q) run_one(q % batch);
    auto t1 = std::chrono::steady_clock::now();
    per_query[static_cast<std::size_t>(rep)] =
        std::chrono::duration<double>(t1 - t0).count() / static_cast<double>(queries);
  }
  std::sort(per_query.begin(), per_query.end());
  return per_query[2];
}

QueryOutcome make_outcome(PlaceIndex row, const QueryResult& r) {
  QueryOutcome o;
  o.query_row = row;
  o.status = r.status;
  o.index = r.status == QueryStatus::matched ? r.index : 0;
  o.fallback_used = r.fallback_used;
  for (const auto& m : r.phases) o.winning_values.push_back(m.value);
  return o;
}

void fill_code_echo(EvalReport& rep, const MapCode& code) {
  rep.storage = storage_report(code);
  rep.periods = code.periods.periods;
  rep.r = code.periods.r();
  for (const auto& bank : code.patterns) rep.training_errors.push_back(bank.training_error);
}

}  // namespace

std::int64_t EvalReport::matched_count() const {
  return std::count_if(outcomes.begin(), outcomes.end(),
                       [](const QueryOutcome& o) { return o.status == QueryStatus::matched; });
}

EvalReport self_query_eval(const FrameDatabase& db, const MapCode& code, bool with_timing) {
  db.validate();
  EvalReport rep;
  rep.mode = "self";
  rep.n = db.n;
  rep.d = db.d;
  fill_code_echo(rep, code);

  LocalizeOptions q;
  q.fallback = false;
  std::int64_t exact = 0;
  for (std::int64_t i = 0; i < db.n; ++i) {
    QueryResult r = localize(code, db.features.row(i).transpose(), q);
    if (r.status == QueryStatus::matched && r.index == i + 1) ++exact;
    rep.outcomes.push_back(make_outcome(i + 1, r));
  }
  rep.accuracy = static_cast<double>(exact) / static_cast<double>(db.n);

  if (with_timing) {
    rep.seconds_ours = median_batch_seconds(db.n, [&](std::int64_t i) {
      volatile PlaceIndex sink = localize(code, db.features.row(i).transpose(), q).index;
      (void)sink;
    });
    BruteForceResult brute = brute_force_baseline(db, db.features, true);
    rep.seconds_brute_force = brute.mean_seconds;
  }
  return rep;
}

EvalReport cross_condition_eval(const MultiSourceDatabase& reference,
                                const FrameDatabase& query_source, const EvalConfig& config) {
  reference.validate();
  query_source.validate();
  if (query_source.n != reference.places() || query_source.d != reference.dim())
    throw std::invalid_argument("query source is not aligned with the reference places");

  PeriodSet chosen;
  if (!config.fixed_periods.empty()) {
    chosen.periods = config.fixed_periods;
    chosen.n_covered = reference.places();
  } else {
    std::vector<PeriodSet> candidates =
        candidate_periods(reference.places(), config.r, config.level_multiplier, config.window);
    if (candidates.empty())
      throw std::runtime_error("no candidate period sets; widen the sampling window");
    chosen = candidates.front();
    if (config.select_by_error) {
      const std::int64_t n = reference.places();
      const auto s = static_cast<std::int64_t>(reference.sources.size());
      Matf rows(n * s, reference.dim());
      std::vector<PlaceIndex> places(static_cast<std::size_t>(n * s));
      for (std::int64_t k = 0; k < s; ++k) {
        rows.middleRows(k * n, n) = reference.sources[static_cast<std::size_t>(k)].features;
        for (std::int64_t i = 0; i < n; ++i) places[static_cast<std::size_t>(k * n + i)] = i + 1;
      }
      chosen = select_by_training_error(candidates, rows, places, config.train);
    }
  }

  EncodeOptions enc;
  enc.train = config.train;
  MapCode code = encode(reference, chosen, enc);

  EvalReport rep;
  rep.mode = "cross";
  rep.n = query_source.n;
  rep.d = query_source.d;
  rep.sources = static_cast<int>(reference.sources.size());
  rep.level_multiplier = config.level_multiplier;
  rep.seed = config.train.seed;
  fill_code_echo(rep, code);

  std::int64_t exact = 0;
  for (std::int64_t i = 0; i < query_source.n; ++i) {
    QueryResult r = localize(code, query_source.features.row(i).transpose(), config.query);
    if (r.status == QueryStatus::matched && r.index == i + 1) ++exact;
    rep.outcomes.push_back(make_outcome(i + 1, r));
  }
  rep.accuracy = static_cast<double>(exact) / static_cast<double>(query_source.n);
  return rep;
}

std::vector<EvalReport> sweep(const SyntheticSpec& spec, const std::vector<int>& r_values,
                              const std::vector<double>& level_multipliers,
                              const std::vector<std::uint64_t>& seeds,
                              const EvalConfig& base_config) {
  std::vector<EvalReport> out;
  for (auto seed : seeds) {
    SyntheticSpec cell_spec = spec;
    cell_spec.seed = seed;
    FrameDatabase db = synthesize(cell_spec);
    for (int r : r_values) {
      for (double c : level_multipliers) {
        std::vector<PeriodSet> candidates = candidate_periods(db.n, r, c, base_config.window);
        if (candidates.empty())
          throw std::runtime_error("no candidate period sets for r=" + std::to_string(r) +
                                   "; widen the sampling window");
        TrainOptions train = base_config.train;
        train.seed = derive_seed(seed, static_cast<std::uint64_t>(r),
                                 static_cast<std::uint64_t>(c * 1000));
        PeriodSet chosen = base_config.select_by_error
                               ? select_by_training_error(candidates, db, train)
                               : candidates.front();
        EncodeOptions enc;
        enc.train = train;
        MapCode code = encode(db, chosen, enc);
        EvalReport rep = self_query_eval(db, code, base_config.with_timing);
        rep.mode = "sweep";
        rep.level_multiplier = c;
        rep.seed = seed;
        out.push_back(std::move(rep));
      }
    }
  }
  return out;
}

BruteForceResult brute_force_baseline(const FrameDatabase& db,
                                      const Eigen::Ref<const Matf>& queries, bool with_timing) {
  db.validate();
  if (queries.cols() != db.d) throw std::invalid_argument("query dimension mismatch");

  BruteForceResult result;
  result.indices.resize(static_cast<std::size_t>(queries.rows()));
  auto nearest = [&](std::int64_t q) {
    Vecf scores = db.features * queries.row(q).transpose();
    PlaceIndex best = 0;
    for (Eigen::Index i = 1; i < scores.size(); ++i)
      if (scores[i] > scores[best]) best = i;
    return best + 1;
  };
  for (Eigen::Index q = 0; q < queries.rows(); ++q)
    result.indices[static_cast<std::size_t>(q)] = nearest(q);

  if (with_timing) {
    result.mean_seconds = median_batch_seconds(queries.rows(), [&](std::int64_t q) {
      volatile PlaceIndex sink = nearest(q);
      (void)sink;
    });
  }
  return result;
}

std::string config_hash(const std::string& canonical) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_report_csv(std::ostream& out, const std::vector<EvalReport>& reports,
                      const std::string& hash) {
  out << "# config_hash=" << hash << "\n";
  out << "mode,n,d,r,level_multiplier,sources,seed,periods,train_errors,sum_tau,"
         "original_bytes,compressed_bytes,ratio,accuracy,queries,matched\n";
  for (const auto& rep : reports) {
    out << rep.mode << ',' << rep.n << ',' << rep.d << ',' << rep.r << ','
        << fmt_double(rep.level_multiplier) << ',' << rep.sources << ',' << rep.seed << ','
        << join_i64(rep.periods) << ',' << join_doubles(rep.training_errors) << ','
        << rep.storage.template_count << ',' << rep.storage.original_bytes << ','
        << rep.storage.compressed_bytes << ',' << fmt_double(rep.storage.ratio) << ','
        << fmt_double(rep.accuracy) << ',' << rep.outcomes.size() << ',' << rep.matched_count()
        << '\n';
  }
}

void write_outcomes_csv(std::ostream& out, const std::vector<QueryOutcome>& outcomes,
                        const std::string& hash) {
  out << "# config_hash=" << hash << "\n";
  out << "query_row,status,index,fallback_used";
  std::size_t banks = outcomes.empty() ? 0 : outcomes.front().winning_values.size();
  for (std::size_t k = 1; k <= banks; ++k) out << ",winning_value_" << k;
  out << "\n";
  for (const auto& o : outcomes) {
    out << o.query_row << ',' << status_name(o.status) << ',' << o.index << ','
        << (o.fallback_used ? 1 : 0);
    for (double v : o.winning_values) out << ',' << fmt_double(v);
    out << "\n";
  }
}

}  // namespace sublinmap
