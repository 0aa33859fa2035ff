#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace dposf {

/// Unix time in seconds.
using Timestamp = std::int64_t;

inline constexpr Timestamp kSecondsPerDay = 86'400;
/// 2000-01-01T00:00:00Z, the epoch from which the vote index counts weeks.
inline constexpr Timestamp kVoteEpoch = 946'684'800;
/// Base units per whole token (4 decimal places).
inline constexpr std::int64_t kUnitsPerToken = 10'000;
inline constexpr std::size_t kMaxVoteTargets = 30;
/// Relative tolerance used when comparing voting weights.
inline constexpr double kWeightRelTol = 1e-9;

/// Account identifier: 1-12 chars of [a-z1-5.], no trailing dot.
class AccountName {
 public:
  explicit AccountName(std::string_view name);

  static bool is_valid(std::string_view name) noexcept;

  const std::string& str() const noexcept { return value_; }

  friend auto operator<=>(const AccountName&, const AccountName&) = default;
  friend bool operator==(const AccountName&, const AccountName&) = default;

 private:
  std::string value_;
};

std::ostream& operator<<(std::ostream& os, const AccountName& name);

/// Non-negative token amount in base units. Arithmetic is checked.
class StakeAmount {
 public:
  constexpr StakeAmount() = default;
  explicit StakeAmount(std::int64_t units);

  static StakeAmount from_tokens(std::int64_t tokens);

  constexpr std::int64_t units() const noexcept { return units_; }
  constexpr double tokens() const noexcept { return static_cast<double>(units_) / kUnitsPerToken; }

  /// Throws OverflowError when the sum is not representable.
  StakeAmount operator+(StakeAmount other) const;
  /// Throws DomainError when the difference would be negative.
  StakeAmount operator-(StakeAmount other) const;
  StakeAmount& operator+=(StakeAmount other) { return *this = *this + other; }
  StakeAmount& operator-=(StakeAmount other) { return *this = *this - other; }

  friend constexpr auto operator<=>(StakeAmount, StakeAmount) = default;

 private:
  std::int64_t units_ = 0;
};

/// Dimensionless voting weight; always finite and non-negative.
using VoteWeight = double;

// Payloads, one per action kind.
struct NewAccount {
  AccountName created;
  friend bool operator==(const NewAccount&, const NewAccount&) = default;
};
struct DelegateBw {
  StakeAmount stake;
  friend bool operator==(const DelegateBw&, const DelegateBw&) = default;
};
struct UndelegateBw {
  StakeAmount stake;
  friend bool operator==(const UndelegateBw&, const UndelegateBw&) = default;
};
struct RegProducer {
  friend bool operator==(const RegProducer&, const RegProducer&) = default;
};
struct RegProxy {
  bool is_proxy = true;
  friend bool operator==(const RegProxy&, const RegProxy&) = default;
};
/// Either delegates to `proxy` or votes for `producers` (sorted, unique, at most 30).
/// Both empty clears the vote.
struct VoteProducer {
  std::optional<AccountName> proxy;
  std::vector<AccountName> producers;
  friend bool operator==(const VoteProducer&, const VoteProducer&) = default;
};

using Payload = std::variant<NewAccount, DelegateBw, UndelegateBw, RegProducer, RegProxy, VoteProducer>;

enum class ActionKind { NewAccount, DelegateBw, UndelegateBw, RegProducer, RegProxy, VoteProducer };

std::string_view to_string(ActionKind kind) noexcept;
std::optional<ActionKind> parse_action_kind(std::string_view text) noexcept;

struct Action {
  AccountName actor;
  Payload payload;
  Timestamp timestamp = 0;
  std::uint64_t block_height = 0;
  std::uint64_t sequence = 0;

  ActionKind kind() const noexcept { return static_cast<ActionKind>(payload.index()); }

  /// Total order of a trace: (block_height, sequence).
  auto order_key() const noexcept { return std::pair{block_height, sequence}; }

  friend bool operator==(const Action&, const Action&) = default;
};

/// Throws ParseError naming the offending field when `action` breaks a payload invariant.
void validate(const Action& action);

struct BlockHeader {
  std::uint64_t height = 0;
  AccountName producer;
  Timestamp timestamp = 0;
  friend bool operator==(const BlockHeader&, const BlockHeader&) = default;
};

/// (1/52) * floor((t_vote - t_init) / (7 * t_day)). Throws DomainError if t_vote < t_init.
double compute_vote_index(Timestamp t_vote, Timestamp t_init = kVoteEpoch, Timestamp t_day = kSecondsPerDay);

/// 10000 * stake_in_tokens * 2^index. Throws DomainError for a negative or non-finite index
/// and OverflowError for a non-finite result.
VoteWeight compute_vote_weight(StakeAmount stake, double index);

/// Weight of `stake` voted at `t_vote`.
inline VoteWeight vote_weight_at(StakeAmount stake, Timestamp t_vote) {
  return compute_vote_weight(stake, compute_vote_index(t_vote));
}

bool weights_close(VoteWeight a, VoteWeight b, double rel_tol = kWeightRelTol) noexcept;

// Trace format: one JSON object per line, {kind, actor, timestamp, block, seq, payload}.
Action parse_action(std::string_view line);
std::string serialize_action(const Action& action);

// Header format: one JSON object per line, {height, producer, timestamp}.
BlockHeader parse_header(std::string_view line);
std::string serialize_header(const BlockHeader& header);

/// Reads a JSON-lines trace; blank lines are skipped. ParseError messages carry the line number.
std::vector<Action> read_trace(std::istream& in);
std::vector<BlockHeader> read_headers(std::istream& in);
void write_trace(std::ostream& out, const std::vector<Action>& trace);
void write_headers(std::ostream& out, const std::vector<BlockHeader>& headers);

}  // namespace dposf

template <>
struct std::hash<dposf::AccountName> {
  std::size_t operator()(const dposf::AccountName& name) const noexcept {
    return std::hash<std::string>{}(name.str());
  }
};
