#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "dposf/ledger.hpp"
#include "dposf/motifs.hpp"

namespace dposf {

/// Aggregated voting relation src -> dst.
struct EdgeStats {
  std::int64_t frequency = 0;  // F: vote placements
  double duration = 0.0;       // T: seconds in force
  double avg_weight = 0.0;     // P: time-averaged weight while in force
};

using DirectedEdge = std::pair<AccountName, AccountName>;

struct VotingGraph {
  std::map<AccountName, bool> nodes;  // name -> registered candidate
  std::map<DirectedEdge, EdgeStats> edges;

  bool is_candidate(const AccountName& n) const {
    auto it = nodes.find(n);
    return it != nodes.end() && it->second;
  }
};

/// Builds the voting network: F counts vote placements (vote events, plus any vote that comes into
/// force without one), T sums the seconds each src -> dst vote was in force until replaced, withdrawn,
/// or `end` (default: last action time), and P is the time-weighted mean of src's exercised weight.
/// Self-votes are dropped.
VotingGraph build_voting_network(std::span<const Action> trace, std::span<const VoteEvent> events,
                                 std::optional<Timestamp> end = std::nullopt);
VotingGraph build_voting_network(std::span<const Action> trace, std::optional<Timestamp> end = std::nullopt);

using Adjacency = std::map<AccountName, std::set<AccountName>>;

/// Undirected simple view of the graph's edges.
Adjacency undirected_view(const VotingGraph& graph);

struct EgonetFeature {
  AccountName node;
  std::size_t neighbors = 0;  // N_i
  std::size_t edges = 0;      // E_i, ego included
};

/// Features for every node in `scope` with at least one neighbor.
std::vector<EgonetFeature> egonet_features(const VotingGraph& graph, const std::set<AccountName>& scope);
std::vector<EgonetFeature> egonet_features(const Adjacency& adj, const std::set<AccountName>& scope);
/// Scope = all registered candidates.
std::vector<EgonetFeature> candidate_egonet_features(const VotingGraph& graph);

struct EdplFit {
  double c = 1.0;
  double alpha = 1.0;
  double r_squared = 0.0;

  double expected(std::size_t n) const;
};

/// Least squares of log E on log N over features with N >= 2. Throws DataError with fewer than 10.
EdplFit fit_edpl(std::span<const EgonetFeature> features);

enum class LogBase { Natural, Ten };

/// max(E, CN^a)/min(E, CN^a) * log(|E - CN^a| + 1).
double outlierness_score(const EgonetFeature& f, const EdplFit& fit, LogBase base = LogBase::Natural);
std::map<AccountName, double> outlierness(std::span<const EgonetFeature> features, const EdplFit& fit,
                                          LogBase base = LogBase::Natural);

inline constexpr double kDefaultOutlierFraction = 0.10;

/// Near-clique anomalies: the top ceil(fraction * #features) nodes by score, restricted to nodes whose
/// E lies above the fit line. Ordered by score descending, name ascending.
std::vector<AccountName> near_clique_anomalies(std::span<const EgonetFeature> features, const EdplFit& fit,
                                               const std::map<AccountName, double>& scores,
                                               double fraction = kDefaultOutlierFraction);

/// Frequency, duration and weight ratio terms of one directed intensity.
struct Intensity {
  double f_ratio = 0.0;
  double t_ratio = 0.0;
  double p_ratio = 0.0;

  double value() const noexcept { return (f_ratio + t_ratio + p_ratio) / 3.0; }
};

struct WeightedNetwork {
  std::vector<AccountName> nodes;                                // sorted
  std::map<std::pair<std::size_t, std::size_t>, double> edges;  // i < j, w_ij = I_ij + I_ji
  std::map<DirectedEdge, Intensity> intensity;

  std::size_t index_of(const AccountName& n) const;
  std::size_t degree(std::size_t i) const;
};

/// Keeps the candidates inside any anomaly's egonet and the directed edges among them, then weights
/// each undirected pair by the summed voting intensity in both directions. Frequency ratios are
/// normalised over each source's kept out-edges; duration and weight ratios over each target's kept
/// in-edges. Throws DataError "nothing to reconstruct" for an empty anomaly set.
WeightedNetwork reconstruct_weighted_network(const VotingGraph& graph, std::span<const AccountName> anomalies);

struct LouvainOptions {
  std::uint64_t seed = 7;
  double min_gain = 1e-7;
};

/// Multi-level Louvain modularity optimisation (resolution 1). Returns a community id per node,
/// renumbered 0.. in order of each community's smallest node index.
std::vector<std::size_t> louvain(const WeightedNetwork& net, LouvainOptions opts = {});

/// Weighted modularity of `community` (one id per node).
double modularity(const WeightedNetwork& net, std::span<const std::size_t> community);

struct Gang {
  std::set<AccountName> members;
  std::vector<std::tuple<AccountName, AccountName, double>> edges;  // intra-community
  double intra_weight = 0.0;
};

struct GangReport {
  std::vector<Gang> communities;  // each with at least two members after pruning
  std::set<AccountName> pruned;   // members with exactly one edge in the network
  double modularity = 0.0;        // of the full Louvain partition
  std::vector<std::size_t> partition;
};

GangReport detect_gangs(const WeightedNetwork& net, LouvainOptions opts = {});

struct GangOptions {
  double outlier_fraction = kDefaultOutlierFraction;
  LogBase log_base = LogBase::Natural;
  LouvainOptions louvain;
};

/// All three steps on a built voting graph.
struct GangAnalysis {
  std::vector<EgonetFeature> features;
  EdplFit fit;
  std::map<AccountName, double> scores;
  std::vector<AccountName> anomalies;
  std::optional<WeightedNetwork> network;  // empty when no anomaly was found
  GangReport report;
};

GangAnalysis analyze_gangs(const VotingGraph& graph, GangOptions opts = {});

}  // namespace dposf
