#include "sublinmap/periods.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace sublinmap {

namespace {

std::int64_t saturating_lcm(std::int64_t a, std::int64_t b) {
  constexpr auto kMax = std::numeric_limits<std::int64_t>::max();
  if (a == kMax || b == kMax) return kMax;
  std::int64_t g = std::gcd(a, b);
  std::int64_t q = a / g;
  if (q > kMax / b) return kMax;
  return q * b;
}

}  // namespace

std::int64_t PeriodSet::sum() const {
  return std::accumulate(periods.begin(), periods.end(), std::int64_t{0});
}

PeriodValidity validate(const std::vector<std::int64_t>& periods, std::int64_t n) {
  if (periods.empty()) throw std::invalid_argument("period set is empty");
  for (auto tau : periods)
    if (tau < 2) throw std::invalid_argument("periods must be >= 2");

  PeriodValidity v;
  v.lcm = 1;
  for (auto tau : periods) v.lcm = saturating_lcm(v.lcm, tau);
  for (std::size_t a = 0; a < periods.size(); ++a)
    for (std::size_t b = a + 1; b < periods.size(); ++b)
      if (std::gcd(periods[a], periods[b]) != 1)
        v.non_coprime_pairs.emplace_back(periods[a], periods[b]);

  v.valid = v.lcm >= n;
  v.reason = "lcm=" + std::to_string(v.lcm) + (v.valid ? " >= " : " < ") + std::to_string(n);
  for (auto& [a, b] : v.non_coprime_pairs)
    v.reason += "; non-co-prime pair (" + std::to_string(a) + "," + std::to_string(b) +
                ") gcd=" + std::to_string(std::gcd(a, b));
  return v;
}

PeriodSet min_storage_pair(std::int64_t n) {
  if (n < 4) throw std::invalid_argument("min_storage_pair requires n >= 4");
  std::int64_t best_t1 = 0, best_t2 = 0;
  std::int64_t best_total = std::numeric_limits<std::int64_t>::max();
  // Ties on total go to the most balanced pair (that is the pair reported
  // for N=100: (10,11) rather than (8,13)), then to the smaller tau1.
  // Scanning tau1 ascending; once tau1 + 2 exceeds the incumbent total no
  // later pair can match it, which keeps the exhaustive scan O(sqrt(n)).
  for (std::int64_t t1 = 2; t1 <= n; ++t1) {
    if (best_t1 != 0 && t1 + 2 > best_total) break;
    std::int64_t t2 = std::max<std::int64_t>(2, (n + t1 - 1) / t1);
    while (std::gcd(t1, t2) != 1) ++t2;
    std::int64_t total = t1 + t2;
    bool better = total < best_total ||
                  (total == best_total && std::abs(t1 - t2) < std::abs(best_t1 - best_t2));
    if (better) {
      best_total = total;
      best_t1 = t1;
      best_t2 = t2;
    }
  }
  PeriodSet set;
  set.periods = {best_t1, best_t2};
  set.n_covered = n;
  return set;
}

std::int64_t ceil_nth_root(std::int64_t n, int r) {
  if (n < 1 || r < 1) throw std::invalid_argument("ceil_nth_root requires n >= 1, r >= 1");
  auto pow_geq = [&](std::int64_t b) {
    // b^r >= n, with saturation.
    std::int64_t acc = 1;
    for (int k = 0; k < r; ++k) {
      if (acc > n / b + 1) return true;
      acc *= b;
      if (acc >= n) return true;
    }
    return acc >= n;
  };
  auto b = static_cast<std::int64_t>(std::floor(std::pow(static_cast<double>(n), 1.0 / r)));
  b = std::max<std::int64_t>(b - 2, 1);
  while (!pow_geq(b)) ++b;
  return b;
}

namespace {

void enumerate_tuples(std::int64_t lo, std::int64_t hi, int r, std::int64_t n,
                      std::vector<std::int64_t>& cur, std::vector<PeriodSet>& out,
                      std::int64_t level) {
  if (static_cast<int>(cur.size()) == r) {
    std::int64_t product = 1;
    bool enough = false;
    for (auto tau : cur) {
      if (product >= (n + tau - 1) / tau) {
        enough = true;
        break;
      }
      product *= tau;
    }
    if (!enough && product < n) return;
    PeriodSet set;
    set.periods = cur;
    set.n_covered = n;
    set.level = level;
    out.push_back(std::move(set));
    return;
  }
  std::int64_t start = cur.empty() ? lo : cur.back() + 1;
  for (std::int64_t tau = start; tau <= hi; ++tau) {
    bool coprime = true;
    for (auto prev : cur)
      if (std::gcd(prev, tau) != 1) {
        coprime = false;
        break;
      }
    if (!coprime) continue;
    cur.push_back(tau);
    enumerate_tuples(lo, hi, r, n, cur, out, level);
    cur.pop_back();
  }
}

}  // namespace

std::vector<PeriodSet> candidate_periods(std::int64_t n, int r, double level_multiplier,
                                         int window) {
  if (n < 2) throw std::invalid_argument("candidate_periods requires n >= 2");
  if (r < 2) throw std::invalid_argument("candidate_periods requires r >= 2");
  if (window < 0) window = 2 * r + 4;

  std::int64_t base = ceil_nth_root(n, r);
  std::int64_t level = 0;
  if (r == 2 && level_multiplier > 0) {
    level = static_cast<std::int64_t>(
        std::ceil(level_multiplier * std::sqrt(static_cast<long double>(n))));
    base = std::max(base, level);
  }
  base = std::max<std::int64_t>(base, 2);

  std::vector<PeriodSet> out;
  std::vector<std::int64_t> cur;
  enumerate_tuples(base, base + window, r, n, cur, out, level);
  std::stable_sort(out.begin(), out.end(), [](const PeriodSet& a, const PeriodSet& b) {
    auto sa = a.sum(), sb = b.sum();
    if (sa != sb) return sa < sb;
    return a.periods < b.periods;
  });
  return out;
}

PeriodSet select_by_training_error(const std::vector<PeriodSet>& candidates,
                                   const Eigen::Ref<const Matf>& features,
                                   const std::vector<PlaceIndex>& places,
                                   const TrainOptions& opts, std::vector<double>* scores) {
  if (candidates.empty()) throw std::invalid_argument("no candidate period sets to select from");

  std::map<std::int64_t, double> error_by_period;
  for (const auto& cand : candidates)
    for (auto tau : cand.periods) error_by_period.emplace(tau, -1.0);
  std::vector<std::int64_t> distinct;
  for (auto& [tau, _] : error_by_period) distinct.push_back(tau);
  for (auto tau : distinct)
    error_by_period[tau] = train_bank(features, places, tau, opts).training_error;

  std::size_t best = 0;
  double best_score = std::numeric_limits<double>::infinity();
  if (scores) scores->assign(candidates.size(), 0.0);
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    double score = 0;
    for (auto tau : candidates[k].periods) score += error_by_period[tau];
    if (scores) (*scores)[k] = score;
    const auto& inc = candidates[best];
    const auto& cand = candidates[k];
    bool better = k == 0 || score < best_score ||
                  (score == best_score &&
                   (cand.sum() < inc.sum() || (cand.sum() == inc.sum() && cand.periods < inc.periods)));
    if (better) {
      best = k;
      best_score = score;
    }
  }
  return candidates[best];
}

PeriodSet select_by_training_error(const std::vector<PeriodSet>& candidates,
                                   const FrameDatabase& db, const TrainOptions& opts,
                                   std::vector<double>* scores) {
  std::vector<PlaceIndex> places(static_cast<std::size_t>(db.n));
  std::iota(places.begin(), places.end(), PlaceIndex{1});
  return select_by_training_error(candidates, db.features, places, opts, scores);
}

}  // namespace sublinmap
