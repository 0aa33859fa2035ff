#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "dposf/ledger.hpp"
#include "dposf/motifs.hpp"

namespace dposf {

enum class PlantKind { SimilarCluster, LinearGang, TriangularGang, EightGang, NearClique };

std::string_view to_string(PlantKind kind) noexcept;
std::optional<PlantKind> parse_plant_kind(std::string_view text) noexcept;

/// One planted anomaly.
///  SimilarCluster  `size` rich voters casting near-identical 10-30 candidate sets within one hour each active month.
///  LinearGang      `size` candidates, each voting directly for all the others.
///  TriangularGang  `size`/2 pairs (a, b): a votes b through a dedicated proxy, b votes a directly.
///  EightGang       `size` candidates, each delegating to its own proxy that votes for the others
///                  (or to one shared proxy when `common_proxy`).
///  NearClique      `size` candidates voting for each other, plus `decoys` candidates that each vote
///                  for exactly one member.
struct PlantSpec {
  PlantKind kind = PlantKind::SimilarCluster;
  std::size_t size = 2;
  bool shared_creator = false;
  double vote_jitter = 0.0;  // SimilarCluster: chance a member's monthly set swaps one candidate
  std::vector<int> months;   // month offsets from the start month; empty = every month
  std::size_t decoys = 0;
  bool common_proxy = false;
};

struct GenConfig {
  std::uint64_t seed = 1;
  std::size_t n_accounts = 2000;
  std::size_t n_candidates = 40;
  std::size_t n_proxies = 10;
  double stake_powerlaw_alpha = 1.5;  // density exponent of background stakes (> 1)
  std::int64_t min_stake_tokens = 10;
  int duration_days = 120;
  Timestamp start_time = 1'527'811'200;  // 2018-06-01T00:00:00Z
  std::vector<PlantSpec> plants;
  double proxy_weight_target = 0.7;
  double block_skip_rate = 0.0;
  double participation_rate = 0.05;
  double revote_prob = 0.3;           // per voter per month
  double candidate_vote_prob = 0.0;   // chance a background candidate votes for other candidates
  std::size_t rounds_per_day = 4;     // sampled production rounds per day
  bool equal_candidate_stakes = false;
};

/// Throws ConfigError naming the offending field or plant.
void validate(const GenConfig& config);

/// Key-value config: `key = value` lines, `#` comments, and repeated
/// `plant = <Kind> size=<n> [shared_creator=<bool>] [jitter=<x>] [months=<i,j,..>] [decoys=<n>] [common_proxy=<bool>]`.
GenConfig parse_gen_config(std::string_view text);
std::string format_gen_config(const GenConfig& config);

struct PlantTruth {
  std::size_t id = 0;
  PlantKind kind = PlantKind::SimilarCluster;
  std::vector<AccountName> members;
  std::map<std::string, std::vector<AccountName>> roles;  // e.g. "proxy", "decoy", "creator"
  /// Motif participant tuples (role order as in MotifInstance) the plant realizes.
  std::vector<std::pair<MotifShape, std::vector<AccountName>>> motifs;
  /// Calendar months in which the plant acts.
  std::vector<YearMonth> active_months;
  std::vector<std::uint64_t> action_seqs;
};

struct GroundTruth {
  std::vector<PlantTruth> plants;
};

std::string truth_json(const GroundTruth& truth, const std::string& trace_digest, const std::string& config_text);
struct TruthFile {
  GroundTruth truth;
  std::string trace_digest;
};
TruthFile parse_truth_json(std::string_view text);

struct GeneratedLedger {
  std::vector<Action> trace;
  std::vector<BlockHeader> headers;
  GroundTruth truth;
};

/// Deterministic under `config.seed`. The trace replays without rejections.
GeneratedLedger generate_ledger(const GenConfig& config);

struct ScheduleOptions {
  Timestamp genesis = 0;  // time of block height 1
  double skip_rate = 0.0;
  std::uint64_t seed = 1;
};

inline constexpr std::size_t kProducersPerRound = 21;
inline constexpr std::size_t kBlocksPerSlot = 6;
inline constexpr std::size_t kBlocksPerRound = kProducersPerRound * kBlocksPerSlot;
inline constexpr Timestamp kRoundSeconds = 63;

using Elector = std::function<std::vector<AccountName>(Timestamp round_start)>;

/// Rounds of 21 slots x 6 blocks at half-second spacing starting at each of `round_starts`; the producer
/// order of a round is `elect(round_start)` truncated to 21. Each block is skipped independently with
/// probability `skip_rate`; skipped heights are not reused. Throws DataError when fewer than 21 producers
/// are available.
std::vector<BlockHeader> generate_block_schedule(const Elector& elect, std::span<const Timestamp> round_starts,
                                                 ScheduleOptions opts);

/// Named random substream: the same (seed, name, index) always yields the same engine.
std::mt19937_64 substream(std::uint64_t seed, std::string_view name, std::uint64_t index = 0);

/// Fixed-width account-name suffix in the name alphabet.
std::string name_code(std::size_t value, std::size_t width);

}  // namespace dposf
