#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "dposf/calendar.hpp"
#include "dposf/ledger.hpp"

namespace dposf {

/// One exercise of `src`'s weight in favor of candidate `dst`, possibly through a proxy.
struct VoteEvent {
  AccountName src;
  AccountName dst;
  std::optional<AccountName> via_proxy;
  Timestamp timestamp = 0;
  bool src_is_candidate = false;  // at event time
  std::size_t action_index = 0;   // trace position of the action that produced the event

  friend bool operator==(const VoteEvent&, const VoteEvent&) = default;
};

/// Flattens a trace into vote events by replaying it:
///  - voteproducer(producers) by u: (u -> c) for each c, plus (d -> c via u) for every account d delegating to u;
///  - voteproducer(proxy p) by u: (u -> c via p) for each c that p currently votes.
/// Rejected actions produce nothing. Throws DataError for an unsorted trace.
std::vector<VoteEvent> build_vote_events(std::span<const Action> trace);

enum class MotifShape { Linear, Triangular, Eight };

std::string_view to_string(MotifShape shape) noexcept;

inline constexpr Timestamp kDefaultMotifWindow = 7 * kSecondsPerDay;

/// Participants by role:
///  Linear     {a, b}          a -> b direct, b -> a direct; a < b
///  Triangular {a, p, b}       a -> b via p, b -> a direct
///  Eight      {a, p1, b, p2}  a -> b via p1, b -> a via p2; a < b
struct MotifInstance {
  MotifShape shape = MotifShape::Linear;
  std::vector<AccountName> participants;
  std::array<VoteEvent, 2> witness;  // witness[0] is the event leaving participants[0]
  Timestamp window_start = 0;        // earlier witness time

  YearMonth month() const noexcept { return month_of(window_start); }
};

struct MotifOptions {
  Timestamp window = kDefaultMotifWindow;
  bool strict_distinct_proxies = false;  // Eight: require p1 != p2
};

// One instance per (participants, UTC month of window_start): the earliest window in that month.
std::vector<MotifInstance> detect_linear(std::span<const VoteEvent> events, MotifOptions opts = {});
std::vector<MotifInstance> detect_triangular(std::span<const VoteEvent> events, MotifOptions opts = {});
std::vector<MotifInstance> detect_eight(std::span<const VoteEvent> events, MotifOptions opts = {});

/// Independent re-check of an instance's witnesses against its shape definition.
bool satisfies_shape(const MotifInstance& m, MotifOptions opts = {});

struct MotifCounts {
  std::size_t linear = 0;
  std::size_t triangular = 0;
  std::size_t eight = 0;

  friend bool operator==(const MotifCounts&, const MotifCounts&) = default;
};

/// Monthly counts per shape, with zero-filled months between `from` and `to` when given.
std::map<YearMonth, MotifCounts> motif_series(std::span<const MotifInstance> instances,
                                              std::optional<YearMonth> from = std::nullopt,
                                              std::optional<YearMonth> to = std::nullopt);

/// Undirected graph whose edges are the voter pairs {a, b} of the given instances.
std::map<AccountName, std::set<AccountName>> motif_relation_graph(std::span<const MotifInstance> instances);

/// Mean local clustering coefficient over nodes of `graph` (nodes of degree < 2 count as 0).
double average_clustering(const std::map<AccountName, std::set<AccountName>>& graph);

/// Connected components of an undirected adjacency map, largest first.
std::vector<std::set<AccountName>> connected_components(const std::map<AccountName, std::set<AccountName>>& graph);

}  // namespace dposf
