#pragma once

#include <map>
#include <set>
#include <span>
#include <vector>

#include "dposf/ledger.hpp"
#include "dposf/replay.hpp"

namespace dposf {

/// A voter's proxy-resolved candidate set at each sample time.
struct VotingRecord {
  AccountName voter;
  std::vector<std::vector<AccountName>> sets;  // each sorted, one per sample time
};

using VotingRecords = std::map<AccountName, VotingRecord>;

struct VoterCluster {
  std::set<AccountName> members;  // at least two
  AccountName seed;               // the center that opened the cluster
};

inline constexpr double kDefaultTheta = 0.9;

/// Per-snapshot effective sets for each of `voters`; voters absent from a snapshot get the empty set.
VotingRecords sample_voting_records(std::span<const VotingSnapshot> snapshots, const std::set<AccountName>& voters);

/// Every account that appears as a voter in any snapshot.
std::set<AccountName> voters_in(std::span<const VotingSnapshot> snapshots);

/// Top ceil(pct·N) voters of `snap` by stake, proxied stake accumulated onto proxies.
std::set<AccountName> top_stakeholders(const VotingSnapshot& snap, double pct);

/// Jaccard index of two sorted sets; nullopt when both are empty.
std::optional<double> jaccard(std::span<const AccountName> a, std::span<const AccountName> b);

/// Mean per-time Jaccard over sample times where at least one set is non-empty; 0 if there are none.
/// Throws DomainError on unequal lengths.
double record_similarity(const VotingRecord& a, const VotingRecord& b);

/// Similarity-threshold voter clustering with transitive frontier expansion. Centers are visited in
/// ascending name order. Throws DomainError unless 0 < theta <= 1.
std::vector<VoterCluster> cluster_voters(const std::set<AccountName>& voters, const VotingRecords& records,
                                         double theta = kDefaultTheta);

/// θ-neighbor lists (indices into the ascending voter order); exposed for the CLI and for testing.
std::vector<std::vector<std::size_t>> similarity_neighbors(const std::vector<const VotingRecord*>& records,
                                                           double theta);

struct CreatorConcordance {
  std::map<AccountName, std::size_t> creators;  // creator -> member count
  bool single_creator = false;
};

/// Sentinel creator for accounts without a recorded creator.
inline const AccountName kRootCreator{"root"};

std::vector<CreatorConcordance> creator_concordance(std::span<const VoterCluster> clusters,
                                                    const std::map<AccountName, AccountName>& creation);

/// created -> creator for every account in `state` (root accounts map to kRootCreator).
std::map<AccountName, AccountName> creation_map(const VotingState& state);

/// Mean pairwise record similarity inside a cluster.
double mean_intra_similarity(const VoterCluster& cluster, const VotingRecords& records);

}  // namespace dposf
