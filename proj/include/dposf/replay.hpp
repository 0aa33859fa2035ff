#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "dposf/ledger.hpp"

namespace dposf {

struct AccountRecord {
  StakeAmount stake;
  std::optional<Timestamp> last_vote_time;
  std::vector<AccountName> votes;  // sorted, at most 30; non-empty implies proxy == nullopt
  std::optional<AccountName> proxy;
  bool is_proxy = false;
  std::optional<AccountName> creator;  // nullopt for root accounts
};

struct ReplayPoint {
  std::uint64_t block_height = 0;
  Timestamp timestamp = 0;
};

/// Outcome of applying one action. `touched` lists accounts whose effective vote set or
/// exercised weight may have changed.
struct ApplyResult {
  std::optional<std::string> rejection;
  std::optional<std::string> notice;
  std::vector<AccountName> touched;

  bool accepted() const noexcept { return !rejection; }
};

/// Replayed voting world state.
///
/// Rules:
///  - a direct voter contributes weight(stake, index(last_vote_time)) in full to each candidate it votes;
///  - a registered proxy contributes its pooled weight, i.e. its own stake plus the stakes of every account
///    delegating to it, all indexed at the proxy's last_vote_time;
///  - a proxy that deregisters keeps its own votes but stops pooling its delegators until it re-registers.
///
/// Received candidate weights are recomputed from per-voter contributions (in name order) whenever they
/// change, so they never drift from a fresh summation.
class VotingState {
 public:
  static inline const AccountName kSystemAccount{"eosio"};

  const std::map<AccountName, AccountRecord>& accounts() const noexcept { return accounts_; }
  const std::map<AccountName, VoteWeight>& candidates() const noexcept { return candidates_; }
  ReplayPoint as_of() const noexcept { return as_of_; }

  const AccountRecord* find(const AccountName& name) const;
  bool is_candidate(const AccountName& name) const { return candidates_.contains(name); }
  std::set<AccountName> proxies() const;

  /// Accounts delegating to `proxy`, regardless of the proxy's registration status.
  const std::set<AccountName>& delegators(const AccountName& proxy) const;
  /// Σ stakes of accounts delegating to `proxy`.
  StakeAmount proxied_stake(const AccountName& proxy) const;
  /// Weight `voter` adds to each of its own direct vote targets (pooled for proxies).
  VoteWeight contribution(const AccountName& voter) const;
  /// Candidates that `account`'s stake currently supports (proxy-resolved).
  std::vector<AccountName> effective_votes(const AccountName& account) const;
  /// Weight of `account`'s own stake as currently exercised (directly or through its proxy).
  VoteWeight exercised_weight(const AccountName& account) const;

  /// Applies `action` if valid; on rejection the state is unchanged.
  ApplyResult apply(const Action& action);

 private:
  std::optional<std::string> check(const Action& action) const;
  void refresh(const AccountName& voter, std::set<AccountName>& dirty);
  void recompute(const std::set<AccountName>& dirty);
  bool proxy_active(const AccountName& proxy) const;

  std::map<AccountName, AccountRecord> accounts_;
  std::map<AccountName, VoteWeight> candidates_;
  std::map<AccountName, std::set<AccountName>> candidate_voters_;
  std::map<AccountName, std::set<AccountName>> delegators_;
  std::map<AccountName, VoteWeight> applied_;  // last contribution added per direct voter
  ReplayPoint as_of_;
};

/// Value-semantics transition. Throws DataError carrying the rejection reason.
VotingState apply_action(VotingState state, const Action& action);

struct RejectedAction {
  std::size_t index = 0;  // position in the trace
  std::uint64_t block_height = 0;
  std::uint64_t sequence = 0;
  std::string reason;
};

struct ReplayLog {
  std::vector<RejectedAction> rejected;
  std::vector<RejectedAction> notices;
};

struct ReplayResult {
  VotingState state;
  ReplayLog log;
};

/// Throws DataError if the trace is not strictly increasing in (block_height, sequence).
void check_trace_order(std::span<const Action> trace);

/// Left fold of VotingState::apply. Rejected actions are logged and skipped.
ReplayResult replay(std::span<const Action> trace);

struct VoterView {
  std::vector<AccountName> effective;  // proxy-resolved candidate set
  StakeAmount stake;
  bool is_proxy = false;
  StakeAmount proxied_stake;
  std::optional<AccountName> proxy;
  VoteWeight weight = 0.0;  // own stake's exercised weight

  bool votes() const noexcept { return !effective.empty() || proxy.has_value(); }
};

struct VotingSnapshot {
  Timestamp taken_at = 0;
  /// Every account that votes, delegates, or is a registered proxy.
  std::map<AccountName, VoterView> per_voter;
  std::map<AccountName, VoteWeight> per_candidate;
};

VotingSnapshot snapshot(const VotingState& state, Timestamp t);

/// Candidates by received weight descending, ties by name ascending; min(n, #candidates) entries.
std::vector<AccountName> top_n_producers(const VotingState& state, std::size_t n = 21);

/// Sampling cadence: calendar months (snapshot at each month's last second) or a fixed period.
struct SnapshotCadence {
  bool monthly = true;
  Timestamp period = 0;

  static SnapshotCadence every_month() { return {}; }
  static SnapshotCadence every(Timestamp seconds) { return {false, seconds}; }
  /// "monthly", "<n>d", "<n>h" or "<n>s". Throws ConfigError.
  static SnapshotCadence parse(std::string_view text);
};

/// Sample times covering [first, last].
std::vector<Timestamp> sample_times(Timestamp first, Timestamp last, SnapshotCadence cadence);

struct SnapshotSeries {
  ReplayResult result;
  std::vector<VotingSnapshot> snapshots;
};

/// Replays `trace` and snapshots the state at each of `times` (state after all actions with
/// timestamp <= t). `times` must be ascending.
SnapshotSeries replay_with_snapshots(std::span<const Action> trace, std::span<const Timestamp> times);
SnapshotSeries replay_with_snapshots(std::span<const Action> trace, SnapshotCadence cadence);

/// Sorted-key JSON of the full state.
std::string canonical_state_json(const VotingState& state);
std::string snapshot_json(const VotingSnapshot& snap);

}  // namespace dposf
