#pragma once

#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "dposf/calendar.hpp"
#include "dposf/ledger.hpp"
#include "dposf/replay.hpp"

namespace dposf {

/// Blocks produced per producer within one UTC month.
struct MonthlyProduction {
  YearMonth month;
  std::map<AccountName, std::int64_t> counts;

  std::int64_t total() const noexcept;
};

std::vector<MonthlyProduction> monthly_production(std::span<const BlockHeader> headers);

struct EntropyOptions {
  std::optional<std::size_t> top_n;  // nullopt = every producer
  bool renormalize = true;           // false: p_j uses the month's global total
};

/// Shannon entropy in bits of the block-share distribution of the top-n producers (count descending,
/// name ascending). Throws DataError "no production data" for an empty month.
double production_entropy(const MonthlyProduction& prod, EntropyOptions opts = {});

using StakeDistribution = std::vector<std::pair<AccountName, StakeAmount>>;

/// Voters by stake descending (ties by name). With `accumulate_proxies`, a proxy's entry is its own
/// stake plus the stakes delegated to it.
StakeDistribution stake_distribution(const VotingSnapshot& snap, bool accumulate_proxies);

/// Σ of the largest ceil(p·N) values over Σ all. Throws DataError on empty input, DomainError unless 0 < p <= 1.
double top_share(std::span<const double> values, double p);
double top_share(const StakeDistribution& dist, double p);

struct PowerLawFit {
  double alpha = 0.0;
  double r_squared = 0.0;
  std::size_t bins_used = 0;
};

/// Fits density ~ x^-alpha by least squares of log(density) on log(x) over a logarithmic histogram
/// whose bin widths double. Needs at least 10 positive values and two non-empty bins.
PowerLawFit powerlaw_exponent(std::span<const double> values);

/// One point of a proxied-vs-all series.
struct SharePoint {
  Timestamp timestamp = 0;
  double all_value = 0.0;
  double proxied_value = 0.0;
  double share = 0.0;  // proxied/all, 0 when all_value == 0
};

struct ShareSeries {
  std::vector<SharePoint> points;
};

struct ProxyShares {
  ShareSeries accounts;
  ShareSeries stake;   // in tokens
  ShareSeries weight;
};

ProxyShares proxy_share_series(std::span<const VotingSnapshot> snapshots);

struct ProducerTurnover {
  std::vector<std::pair<YearMonth, std::size_t>> monthly_distinct;
  std::vector<std::pair<YearMonth, std::size_t>> cumulative_distinct;
  std::map<AccountName, std::size_t> active_days;
};

ProducerTurnover producer_turnover(std::span<const BlockHeader> headers);

}  // namespace dposf
