#include "dposf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "dposf/errors.hpp"
#include "dposf/linalg.hpp"

namespace dposf {

std::int64_t MonthlyProduction::total() const noexcept {
  std::int64_t sum = 0;
  for (const auto& [_, c] : counts) sum += c;
  return sum;
}

std::vector<MonthlyProduction> monthly_production(std::span<const BlockHeader> headers) {
  std::map<YearMonth, std::map<AccountName, std::int64_t>> buckets;
  for (const auto& h : headers) ++buckets[month_of(h.timestamp)][h.producer];
  std::vector<MonthlyProduction> out;
  out.reserve(buckets.size());
  for (auto& [m, counts] : buckets) out.push_back({m, std::move(counts)});
  return out;
}

double production_entropy(const MonthlyProduction& prod, EntropyOptions opts) {
  if (prod.counts.empty()) throw DataError("no production data");
  if (opts.top_n && *opts.top_n == 0) throw DomainError("n must be at least 1");

  std::vector<std::pair<AccountName, std::int64_t>> ranked(prod.counts.begin(), prod.counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  const std::size_t n = std::min(opts.top_n.value_or(ranked.size()), ranked.size());

  std::int64_t denom = 0;
  if (opts.renormalize) {
    for (std::size_t i = 0; i < n; ++i) denom += ranked[i].second;
  } else {
    denom = prod.total();
  }
  if (denom <= 0) throw DataError("no production data");

  Eigen::ArrayXd p(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    p(static_cast<Eigen::Index>(i)) = static_cast<double>(ranked[i].second) / static_cast<double>(denom);
  }
  return entropy_bits(p);
}

StakeDistribution stake_distribution(const VotingSnapshot& snap, bool accumulate_proxies) {
  StakeDistribution out;
  out.reserve(snap.per_voter.size());
  for (const auto& [name, v] : snap.per_voter) {
    StakeAmount s = v.stake;
    if (accumulate_proxies && v.is_proxy) s += v.proxied_stake;
    out.emplace_back(name, s);
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

double top_share(std::span<const double> values, double p) {
  if (values.empty()) throw DataError("empty distribution");
  if (!(p > 0.0 && p <= 1.0)) throw DomainError("p must be in (0, 1]");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>{});
  const auto n = sorted.size();
  const auto k = std::min(n, static_cast<std::size_t>(std::ceil(p * static_cast<double>(n) - 1e-9)));
  const double total = std::accumulate(sorted.begin(), sorted.end(), 0.0);
  if (total <= 0.0) return 0.0;
  const double top = std::accumulate(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(std::max<std::size_t>(k, 1)), 0.0);
  return top / total;
}

double top_share(const StakeDistribution& dist, double p) {
  std::vector<double> values;
  values.reserve(dist.size());
  for (const auto& [_, s] : dist) values.push_back(static_cast<double>(s.units()));
  return top_share(values, p);
}

PowerLawFit powerlaw_exponent(std::span<const double> values) {
  if (values.size() < 10) throw DataError("power-law fit needs at least 10 values");
  double xmin = values.front();
  for (double v : values) {
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("power-law fit needs positive finite values");
    xmin = std::min(xmin, v);
  }

  std::map<int, std::size_t> bins;
  for (double v : values) ++bins[static_cast<int>(std::floor(std::log2(v / xmin)))];
  if (bins.size() < 2) throw DataError("degenerate distribution: all values fall in one bin");

  const auto k = static_cast<Eigen::Index>(bins.size());
  Eigen::VectorXd log_x(k);
  Eigen::VectorXd log_density(k);
  const double n = static_cast<double>(values.size());
  Eigen::Index i = 0;
  for (const auto& [b, count] : bins) {
    const double width = std::ldexp(xmin, b);
    log_x(i) = std::log(width * std::sqrt(2.0));
    log_density(i) = std::log(static_cast<double>(count) / (n * width));
    ++i;
  }
  const auto line = fit_line(log_x, log_density);
  return {-line.slope, line.r_squared, bins.size()};
}

ProxyShares proxy_share_series(std::span<const VotingSnapshot> snapshots) {
  ProxyShares out;
  auto push = [](ShareSeries& s, Timestamp t, double all, double proxied) {
    s.points.push_back({t, all, proxied, all > 0.0 ? proxied / all : 0.0});
  };
  for (const auto& snap : snapshots) {
    double n_all = 0, n_px = 0, s_all = 0, s_px = 0, w_all = 0, w_px = 0;
    for (const auto& [_, v] : snap.per_voter) {
      if (!v.votes()) continue;
      const bool proxied = v.proxy.has_value();
      n_all += 1;
      s_all += v.stake.tokens();
      w_all += v.weight;
      if (proxied) {
        n_px += 1;
        s_px += v.stake.tokens();
        w_px += v.weight;
      }
    }
    push(out.accounts, snap.taken_at, n_all, n_px);
    push(out.stake, snap.taken_at, s_all, s_px);
    push(out.weight, snap.taken_at, w_all, w_px);
  }
  return out;
}

ProducerTurnover producer_turnover(std::span<const BlockHeader> headers) {
  ProducerTurnover out;
  std::map<YearMonth, std::set<AccountName>> monthly;
  std::map<AccountName, std::set<std::int64_t>> days;
  for (const auto& h : headers) {
    monthly[month_of(h.timestamp)].insert(h.producer);
    days[h.producer].insert(day_of(h.timestamp));
  }
  std::set<AccountName> seen;
  for (const auto& [m, producers] : monthly) {
    seen.insert(producers.begin(), producers.end());
    out.monthly_distinct.emplace_back(m, producers.size());
    out.cumulative_distinct.emplace_back(m, seen.size());
  }
  for (const auto& [p, d] : days) out.active_days.emplace(p, d.size());
  return out;
}

}  // namespace dposf
