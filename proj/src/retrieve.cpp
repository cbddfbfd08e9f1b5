#include "sublinmap/retrieve.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

namespace sublinmap {

std::string status_name(QueryStatus s) {
  switch (s) {
    case QueryStatus::matched: return "matched";
    case QueryStatus::rejected_outlier: return "rejected_outlier";
    case QueryStatus::ambiguous: return "ambiguous";
    case QueryStatus::no_consensus: return "no_consensus";
  }
  return "?";
}

std::vector<PlaceIndex> candidate_set(int phase, std::int64_t period, std::int64_t n) {
  if (phase < 1 || phase > period) throw std::invalid_argument("phase out of [1, tau]");
  std::vector<PlaceIndex> out;
  out.reserve(static_cast<std::size_t>(n / period + 1));
  // Smallest i >= 1 with i mod tau = phase - 1.
  std::int64_t first = phase - 1 == 0 ? period : phase - 1;
  for (std::int64_t i = first; i <= n; i += period) out.push_back(i);
  return out;
}

std::vector<PlaceIndex> intersect(const std::vector<std::vector<PlaceIndex>>& sets) {
  if (sets.empty()) return {};
  std::vector<PlaceIndex> acc = sets.front();
  for (std::size_t k = 1; k < sets.size() && !acc.empty(); ++k) {
    const auto& next = sets[k];
    std::vector<PlaceIndex> merged;
    std::size_t a = 0, b = 0;
    while (a < acc.size() && b < next.size()) {
      if (acc[a] < next[b]) {
        ++a;
      } else if (next[b] < acc[a]) {
        ++b;
      } else {
        merged.push_back(acc[a]);
        ++a;
        ++b;
      }
    }
    acc = std::move(merged);
  }
  return acc;
}

PlaceIndex fallback_resolve(const std::vector<Vecd>& phase_scores,
                            const std::vector<std::int64_t>& periods, std::int64_t n) {
  PlaceIndex best = 1;
  double best_score = -std::numeric_limits<double>::infinity();
  for (PlaceIndex i = 1; i <= n; ++i) {
    double score = 0;
    for (std::size_t k = 0; k < periods.size(); ++k)
      score += phase_scores[k][phase_of(i, periods[k]) - 1];
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

QueryResult localize(const MapCode& code, const Eigen::Ref<const Vecf>& x,
                     const LocalizeOptions& opts) {
  Vecf query;
  if (code.lda_projection.size() > 0) {
    if (x.size() != code.lda_projection.rows())
      throw std::invalid_argument("query dimension does not match map (expected raw dim " +
                                  std::to_string(code.lda_projection.rows()) + ")");
    query = (x.cast<double>().transpose() * code.lda_projection.cast<double>())
                .transpose()
                .cast<float>();
  } else {
    if (x.size() != code.d)
      throw std::invalid_argument("query dimension does not match map (expected " +
                                  std::to_string(code.d) + ")");
    query = x;
  }

  QueryResult result;
  std::vector<Vecd> scores;
  scores.reserve(code.patterns.size());
  for (const auto& bank : code.patterns) {
    scores.push_back(bank.decision_values(query));
    result.phases.push_back(decide_phase_from_values(scores.back()));
  }

  if (opts.reject && code.has_threshold) {
    bool all_below = true;
    for (const auto& m : result.phases)
      if (m.value >= static_cast<double>(code.rejection_threshold)) {
        all_below = false;
        break;
      }
    if (all_below) {
      result.status = QueryStatus::rejected_outlier;
      return result;
    }
  }

  std::vector<std::vector<PlaceIndex>> sets;
  sets.reserve(code.patterns.size());
  for (std::size_t k = 0; k < code.patterns.size(); ++k) {
    sets.push_back(candidate_set(result.phases[k].phase, code.patterns[k].period, code.n));
    result.candidates_examined += static_cast<std::int64_t>(sets.back().size());
  }
  std::vector<PlaceIndex> hits = intersect(sets);

  if (hits.size() == 1) {
    result.status = QueryStatus::matched;
    result.index = hits.front();
  } else if (hits.size() > 1) {
    // Unreachable when lcm(periods) >= n, which encode and load enforce.
    result.status = QueryStatus::ambiguous;
  } else if (opts.fallback) {
    result.status = QueryStatus::matched;
    result.index = fallback_resolve(scores, code.periods.periods, code.n);
    result.fallback_used = true;
  } else {
    result.status = QueryStatus::no_consensus;
  }
  return result;
}

}  // namespace sublinmap
