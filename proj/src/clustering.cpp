#include "dposf/clustering.hpp"

#include <algorithm>
#include <cmath>

#include "dposf/errors.hpp"
#include "dposf/metrics.hpp"

namespace dposf {

VotingRecords sample_voting_records(std::span<const VotingSnapshot> snapshots, const std::set<AccountName>& voters) {
  VotingRecords out;
  for (const auto& v : voters) {
    VotingRecord rec{v, {}};
    rec.sets.reserve(snapshots.size());
    for (const auto& snap : snapshots) {
      auto it = snap.per_voter.find(v);
      rec.sets.push_back(it == snap.per_voter.end() ? std::vector<AccountName>{} : it->second.effective);
    }
    out.emplace(v, std::move(rec));
  }
  return out;
}

std::set<AccountName> voters_in(std::span<const VotingSnapshot> snapshots) {
  std::set<AccountName> out;
  for (const auto& snap : snapshots) {
    for (const auto& [name, v] : snap.per_voter) {
      if (v.votes()) out.insert(name);
    }
  }
  return out;
}

std::set<AccountName> top_stakeholders(const VotingSnapshot& snap, double pct) {
  if (!(pct > 0.0 && pct <= 1.0)) throw DomainError("stakeholder fraction must be in (0, 1]");
  const auto dist = stake_distribution(snap, /*accumulate_proxies=*/true);
  const auto k = std::min(dist.size(), static_cast<std::size_t>(std::ceil(pct * static_cast<double>(dist.size()) - 1e-9)));
  std::set<AccountName> out;
  for (std::size_t i = 0; i < k; ++i) out.insert(dist[i].first);
  return out;
}

std::optional<double> jaccard(std::span<const AccountName> a, std::span<const AccountName> b) {
  if (a.empty() && b.empty()) return std::nullopt;
  std::size_t common = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      ++common;
      ++i;
      ++j;
    }
  }
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

double record_similarity(const VotingRecord& a, const VotingRecord& b) {
  if (a.sets.size() != b.sets.size()) throw DomainError("voting records have unequal lengths");
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t t = 0; t < a.sets.size(); ++t) {
    if (auto j = jaccard(a.sets[t], b.sets[t])) {
      sum += *j;
      ++counted;
    }
  }
  return counted == 0 ? 0.0 : sum / static_cast<double>(counted);
}

namespace {

// Records with candidates interned to small integers for the pairwise pass.
struct InternedRecord {
  std::vector<std::vector<std::uint32_t>> sets;
};

std::vector<InternedRecord> intern(const std::vector<const VotingRecord*>& records) {
  std::map<AccountName, std::uint32_t> ids;
  std::vector<InternedRecord> out;
  out.reserve(records.size());
  for (const auto* r : records) {
    InternedRecord ir;
    ir.sets.reserve(r->sets.size());
    for (const auto& s : r->sets) {
      std::vector<std::uint32_t> v;
      v.reserve(s.size());
      for (const auto& c : s) v.push_back(ids.try_emplace(c, static_cast<std::uint32_t>(ids.size())).first->second);
      std::sort(v.begin(), v.end());
      ir.sets.push_back(std::move(v));
    }
    out.push_back(std::move(ir));
  }
  return out;
}

double interned_similarity(const InternedRecord& a, const InternedRecord& b) {
  double sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t t = 0; t < a.sets.size(); ++t) {
    const auto& x = a.sets[t];
    const auto& y = b.sets[t];
    if (x.empty() && y.empty()) continue;
    std::size_t common = 0;
    for (std::size_t i = 0, j = 0; i < x.size() && j < y.size();) {
      if (x[i] < y[j]) {
        ++i;
      } else if (y[j] < x[i]) {
        ++j;
      } else {
        ++common;
        ++i;
        ++j;
      }
    }
    sum += static_cast<double>(common) / static_cast<double>(x.size() + y.size() - common);
    ++counted;
  }
  return counted == 0 ? 0.0 : sum / static_cast<double>(counted);
}

}  // namespace

std::vector<std::vector<std::size_t>> similarity_neighbors(const std::vector<const VotingRecord*>& records,
                                                           double theta) {
  const auto interned = intern(records);
  const std::size_t n = interned.size();
  for (std::size_t i = 1; i < n; ++i) {
    if (interned[i].sets.size() != interned[0].sets.size()) throw DomainError("voting records have unequal lengths");
  }
  std::vector<std::vector<std::size_t>> nbrs(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (interned_similarity(interned[i], interned[j]) >= theta) {
        nbrs[i].push_back(j);
        nbrs[j].push_back(i);
      }
    }
  }
  return nbrs;
}

std::vector<VoterCluster> cluster_voters(const std::set<AccountName>& voters, const VotingRecords& records,
                                         double theta) {
  if (!(theta > 0.0 && theta <= 1.0)) throw DomainError("theta out of range (0, 1]");
  const std::vector<AccountName> order(voters.begin(), voters.end());
  std::vector<const VotingRecord*> recs;
  recs.reserve(order.size());
  for (const auto& v : order) {
    auto it = records.find(v);
    if (it == records.end()) throw DomainError("no voting record for " + v.str());
    recs.push_back(&it->second);
  }
  const auto nbrs = similarity_neighbors(recs, theta);

  std::vector<char> visited(order.size(), 0);
  std::vector<VoterCluster> out;
  for (std::size_t center = 0; center < order.size(); ++center) {
    if (visited[center]) continue;
    visited[center] = 1;
    VoterCluster cluster{{order[center]}, order[center]};
    // The frontier grows while it is scanned: each newly absorbed member appends its own neighbors.
    std::vector<std::size_t> frontier = nbrs[center];
    for (std::size_t k = 0; k < frontier.size(); ++k) {
      const std::size_t j = frontier[k];
      if (visited[j]) continue;
      visited[j] = 1;
      cluster.members.insert(order[j]);
      frontier.insert(frontier.end(), nbrs[j].begin(), nbrs[j].end());
    }
    if (cluster.members.size() != 1) out.push_back(std::move(cluster));
  }
  return out;
}

std::vector<CreatorConcordance> creator_concordance(std::span<const VoterCluster> clusters,
                                                    const std::map<AccountName, AccountName>& creation) {
  std::vector<CreatorConcordance> out;
  out.reserve(clusters.size());
  for (const auto& c : clusters) {
    CreatorConcordance cc;
    for (const auto& m : c.members) {
      auto it = creation.find(m);
      ++cc.creators[it == creation.end() ? kRootCreator : it->second];
    }
    cc.single_creator = cc.creators.size() == 1 && cc.creators.begin()->first != kRootCreator;
    out.push_back(std::move(cc));
  }
  return out;
}

std::map<AccountName, AccountName> creation_map(const VotingState& state) {
  std::map<AccountName, AccountName> out;
  for (const auto& [name, rec] : state.accounts()) out.emplace(name, rec.creator.value_or(kRootCreator));
  return out;
}

double mean_intra_similarity(const VoterCluster& cluster, const VotingRecords& records) {
  const std::vector<AccountName> m(cluster.members.begin(), cluster.members.end());
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = i + 1; j < m.size(); ++j) {
      sum += record_similarity(records.at(m[i]), records.at(m[j]));
      ++pairs;
    }
  }
  return pairs == 0 ? 0.0 : sum / static_cast<double>(pairs);
}

}  // namespace dposf
