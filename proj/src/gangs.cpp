#include "dposf/gangs.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "dposf/errors.hpp"
#include "dposf/linalg.hpp"
#include "dposf/replay.hpp"

namespace dposf {

// ---------------------------------------------------------------------------------------------
// Voting network

namespace {

struct EdgeAccumulator {
  std::int64_t frequency = 0;
  double duration = 0.0;
  double integral = 0.0;
  double last_weight = 0.0;
};

struct OpenVote {
  Timestamp since = 0;
  double weight = 0.0;
};

struct Exercised {
  std::vector<AccountName> targets;
  double weight = 0.0;
};

class IntervalTracker {
 public:
  void update(const AccountName& u, Exercised now, Timestamp t, const std::set<DirectedEdge>& evented) {
    Exercised& before = current_[u];
    for (const auto& c : before.targets) {
      if (c == u) continue;
      const bool kept = std::binary_search(now.targets.begin(), now.targets.end(), c);
      if (!kept) {
        close({u, c}, t);
      } else if (now.weight != before.weight) {
        close({u, c}, t);
        open({u, c}, t, now.weight);
      }
    }
    for (const auto& c : now.targets) {
      if (c == u || std::binary_search(before.targets.begin(), before.targets.end(), c)) continue;
      open({u, c}, t, now.weight);
      if (!evented.contains({u, c})) ++acc_[{u, c}].frequency;
    }
    before = std::move(now);
  }

  void count_event(const DirectedEdge& e) {
    if (e.first != e.second) ++acc_[e].frequency;
  }

  std::map<DirectedEdge, EdgeAccumulator> finish(Timestamp end) {
    while (!open_.empty()) close(open_.begin()->first, end);
    return std::move(acc_);
  }

 private:
  void open(const DirectedEdge& e, Timestamp t, double w) {
    open_.insert_or_assign(e, OpenVote{t, w});
    acc_[e].last_weight = w;
  }

  void close(const DirectedEdge& e, Timestamp t) {
    auto it = open_.find(e);
    if (it == open_.end()) return;
    const auto span = static_cast<double>(std::max<Timestamp>(0, t - it->second.since));
    auto& a = acc_[e];
    a.duration += span;
    a.integral += span * it->second.weight;
    open_.erase(it);
  }

  std::map<AccountName, Exercised> current_;
  std::map<DirectedEdge, OpenVote> open_;
  std::map<DirectedEdge, EdgeAccumulator> acc_;
};

}  // namespace

VotingGraph build_voting_network(std::span<const Action> trace, std::span<const VoteEvent> events,
                                 std::optional<Timestamp> end) {
  check_trace_order(trace);
  VotingState state;
  IntervalTracker tracker;
  std::size_t next_event = 0;
  Timestamp last = trace.empty() ? 0 : trace.back().timestamp;

  for (std::size_t i = 0; i < trace.size(); ++i) {
    const Action& a = trace[i];
    last = std::max(last, a.timestamp);
    const auto result = state.apply(a);

    std::set<DirectedEdge> evented;
    for (; next_event < events.size() && events[next_event].action_index <= i; ++next_event) {
      const auto& e = events[next_event];
      if (e.action_index != i) continue;
      evented.insert({e.src, e.dst});
      tracker.count_event({e.src, e.dst});
    }
    if (!result.accepted()) continue;

    const std::set<AccountName> touched(result.touched.begin(), result.touched.end());
    for (const auto& u : touched) {
      tracker.update(u, {state.effective_votes(u), state.exercised_weight(u)}, a.timestamp, evented);
    }
  }

  VotingGraph g;
  for (const auto& [name, _] : state.candidates()) g.nodes[name] = true;
  for (auto& [e, acc] : tracker.finish(std::max(last, end.value_or(last)))) {
    if (acc.frequency == 0) continue;
    const double avg = acc.duration > 0.0 ? acc.integral / acc.duration : acc.last_weight;
    g.edges.emplace(e, EdgeStats{acc.frequency, acc.duration, avg});
    g.nodes.try_emplace(e.first, state.is_candidate(e.first));
    g.nodes.try_emplace(e.second, state.is_candidate(e.second));
  }
  return g;
}

VotingGraph build_voting_network(std::span<const Action> trace, std::optional<Timestamp> end) {
  const auto events = build_vote_events(trace);
  return build_voting_network(trace, events, end);
}

// ---------------------------------------------------------------------------------------------
// Egonet features and OddBall scoring

Adjacency undirected_view(const VotingGraph& graph) {
  Adjacency adj;
  for (const auto& [name, _] : graph.nodes) adj[name];
  for (const auto& [e, _] : graph.edges) {
    if (e.first == e.second) continue;
    adj[e.first].insert(e.second);
    adj[e.second].insert(e.first);
  }
  return adj;
}

std::vector<EgonetFeature> egonet_features(const Adjacency& adj, const std::set<AccountName>& scope) {
  std::vector<EgonetFeature> out;
  for (const auto& node : scope) {
    auto it = adj.find(node);
    if (it == adj.end() || it->second.empty()) continue;
    const auto& nbrs = it->second;
    std::size_t twice_inner = 0;
    for (const auto& v : nbrs) {
      const auto& nv = adj.at(v);
      // Count neighbours of v that are also neighbours of the ego.
      if (nv.size() < nbrs.size()) {
        for (const auto& w : nv) twice_inner += nbrs.contains(w);
      } else {
        for (const auto& w : nbrs) twice_inner += nv.contains(w);
      }
    }
    out.push_back({node, nbrs.size(), nbrs.size() + twice_inner / 2});
  }
  return out;
}

std::vector<EgonetFeature> egonet_features(const VotingGraph& graph, const std::set<AccountName>& scope) {
  return egonet_features(undirected_view(graph), scope);
}

std::vector<EgonetFeature> candidate_egonet_features(const VotingGraph& graph) {
  std::set<AccountName> scope;
  for (const auto& [name, cand] : graph.nodes) {
    if (cand) scope.insert(name);
  }
  return egonet_features(graph, scope);
}

double EdplFit::expected(std::size_t n) const { return c * std::pow(static_cast<double>(n), alpha); }

EdplFit fit_edpl(std::span<const EgonetFeature> features) {
  std::vector<const EgonetFeature*> usable;
  for (const auto& f : features) {
    if (f.neighbors >= 2) usable.push_back(&f);
  }
  if (usable.size() < 10) throw DataError("EDPL fit needs at least 10 egonets with two or more neighbours");
  const auto n = static_cast<Eigen::Index>(usable.size());
  Eigen::VectorXd log_n(n);
  Eigen::VectorXd log_e(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    log_n(i) = std::log(static_cast<double>(usable[static_cast<std::size_t>(i)]->neighbors));
    log_e(i) = std::log(static_cast<double>(usable[static_cast<std::size_t>(i)]->edges));
  }
  if ((log_n.array() == log_n(0)).all()) throw DataError("EDPL fit needs egonets of differing sizes");
  const auto line = fit_line(log_n, log_e);
  return {std::exp(line.intercept), line.slope, line.r_squared};
}

double outlierness_score(const EgonetFeature& f, const EdplFit& fit, LogBase base) {
  const double e = static_cast<double>(f.edges);
  const double expected = fit.expected(f.neighbors);
  const double hi = std::max(e, expected);
  const double lo = std::min(e, expected);
  const double dist = std::abs(e - expected) + 1.0;
  const double lg = base == LogBase::Natural ? std::log(dist) : std::log10(dist);
  return (hi / lo) * lg;
}

std::map<AccountName, double> outlierness(std::span<const EgonetFeature> features, const EdplFit& fit, LogBase base) {
  std::map<AccountName, double> out;
  for (const auto& f : features) out.emplace(f.node, outlierness_score(f, fit, base));
  return out;
}

std::vector<AccountName> near_clique_anomalies(std::span<const EgonetFeature> features, const EdplFit& fit,
                                               const std::map<AccountName, double>& scores, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw DomainError("outlier fraction must be in (0, 1]");
  const auto k = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(features.size()) - 1e-9));
  std::vector<std::pair<double, AccountName>> above;
  for (const auto& f : features) {
    if (static_cast<double>(f.edges) > fit.expected(f.neighbors)) above.emplace_back(scores.at(f.node), f.node);
  }
  std::sort(above.begin(), above.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<AccountName> out;
  for (std::size_t i = 0; i < std::min(k, above.size()); ++i) out.push_back(above[i].second);
  return out;
}

// ---------------------------------------------------------------------------------------------
// Reconstruction

std::size_t WeightedNetwork::index_of(const AccountName& n) const {
  auto it = std::lower_bound(nodes.begin(), nodes.end(), n);
  if (it == nodes.end() || *it != n) throw DomainError("unknown node " + n.str());
  return static_cast<std::size_t>(it - nodes.begin());
}

std::size_t WeightedNetwork::degree(std::size_t i) const {
  std::size_t d = 0;
  for (const auto& [e, _] : edges) d += (e.first == i) + (e.second == i);
  return d;
}

WeightedNetwork reconstruct_weighted_network(const VotingGraph& graph, std::span<const AccountName> anomalies) {
  if (anomalies.empty()) throw DataError("nothing to reconstruct");
  const Adjacency adj = undirected_view(graph);

  std::set<AccountName> kept;
  for (const auto& a : anomalies) {
    if (!graph.is_candidate(a)) throw DomainError("anomaly " + a.str() + " is not a candidate");
    kept.insert(a);
    if (auto it = adj.find(a); it != adj.end()) {
      for (const auto& v : it->second) {
        if (graph.is_candidate(v)) kept.insert(v);
      }
    }
  }

  std::map<AccountName, double> f_out, t_in, p_in;
  std::vector<std::pair<DirectedEdge, const EdgeStats*>> inner;
  for (const auto& [e, s] : graph.edges) {
    if (!kept.contains(e.first) || !kept.contains(e.second) || e.first == e.second) continue;
    inner.emplace_back(e, &s);
    f_out[e.first] += static_cast<double>(s.frequency);
    t_in[e.second] += s.duration;
    p_in[e.second] += s.avg_weight;
  }

  WeightedNetwork net;
  net.nodes.assign(kept.begin(), kept.end());
  auto ratio = [](double x, double total) { return total > 0.0 ? x / total : 0.0; };
  for (const auto& [e, s] : inner) {
    const Intensity in{ratio(static_cast<double>(s->frequency), f_out[e.first]), ratio(s->duration, t_in[e.second]),
                       ratio(s->avg_weight, p_in[e.second])};
    net.intensity.emplace(e, in);
    auto i = net.index_of(e.first);
    auto j = net.index_of(e.second);
    if (i > j) std::swap(i, j);
    net.edges[{i, j}] += in.value();
  }
  return net;
}

// ---------------------------------------------------------------------------------------------
// Louvain

namespace {

// Level graph: symmetric neighbour lists without self entries, plus per-node internal weight.
struct LevelGraph {
  std::vector<std::vector<std::pair<std::size_t, double>>> adj;
  std::vector<double> internal;

  std::size_t size() const { return adj.size(); }

  double degree(std::size_t i) const {
    double k = 2.0 * internal[i];
    for (const auto& [_, w] : adj[i]) k += w;
    return k;
  }
};

LevelGraph level_from(const WeightedNetwork& net) {
  LevelGraph g;
  g.adj.resize(net.nodes.size());
  g.internal.assign(net.nodes.size(), 0.0);
  for (const auto& [e, w] : net.edges) {
    if (e.first == e.second) {
      g.internal[e.first] += w;
      continue;
    }
    g.adj[e.first].emplace_back(e.second, w);
    g.adj[e.second].emplace_back(e.first, w);
  }
  for (auto& nbrs : g.adj) std::sort(nbrs.begin(), nbrs.end());
  return g;
}

double level_modularity(const LevelGraph& g, const std::vector<std::size_t>& comm, double m) {
  std::vector<double> in(g.size(), 0.0), tot(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) {
    tot[comm[i]] += g.degree(i);
    in[comm[i]] += g.internal[i];
    for (const auto& [j, w] : g.adj[i]) {
      if (i < j && comm[i] == comm[j]) in[comm[i]] += w;
    }
  }
  double q = 0.0;
  for (std::size_t c = 0; c < g.size(); ++c) q += in[c] / m - (tot[c] / (2.0 * m)) * (tot[c] / (2.0 * m));
  return q;
}

// Local moving phase. Returns true if any node changed community.
bool one_level(const LevelGraph& g, std::vector<std::size_t>& comm, double m, std::mt19937_64& rng, double min_gain) {
  const std::size_t n = g.size();
  std::vector<double> k(n), tot(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    k[i] = g.degree(i);
    tot[comm[i]] += k[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  bool changed = false;
  std::vector<double> link(n, -1.0);
  std::vector<std::size_t> touched;
  double q = level_modularity(g, comm, m);
  for (;;) {
    std::size_t moves = 0;
    for (const std::size_t i : order) {
      const std::size_t own = comm[i];
      touched.clear();
      link[own] = 0.0;
      touched.push_back(own);
      for (const auto& [j, w] : g.adj[i]) {
        const std::size_t c = comm[j];
        if (link[c] < 0.0) {
          link[c] = 0.0;
          touched.push_back(c);
        }
        link[c] += w;
      }
      tot[own] -= k[i];
      std::size_t best = own;
      double best_gain = link[own] - tot[own] * k[i] / (2.0 * m);
      for (const std::size_t c : touched) {
        const double gain = link[c] - tot[c] * k[i] / (2.0 * m);
        if (gain > best_gain) {
          best_gain = gain;
          best = c;
        }
      }
      tot[best] += k[i];
      comm[i] = best;
      if (best != own) ++moves;
      for (const std::size_t c : touched) link[c] = -1.0;
    }
    const double q_new = level_modularity(g, comm, m);
    if (moves > 0) changed = true;
    if (moves == 0 || q_new - q < min_gain) break;
    q = q_new;
  }
  return changed;
}

// Renumbers communities 0.. in order of first appearance.
std::size_t renumber(std::vector<std::size_t>& comm) {
  std::vector<std::size_t> id(comm.size(), SIZE_MAX);
  std::size_t next = 0;
  for (auto& c : comm) {
    if (id[c] == SIZE_MAX) id[c] = next++;
    c = id[c];
  }
  return next;
}

LevelGraph aggregate(const LevelGraph& g, const std::vector<std::size_t>& comm, std::size_t n_comm) {
  LevelGraph out;
  out.adj.resize(n_comm);
  out.internal.assign(n_comm, 0.0);
  std::vector<std::map<std::size_t, double>> links(n_comm);
  for (std::size_t i = 0; i < g.size(); ++i) {
    out.internal[comm[i]] += g.internal[i];
    for (const auto& [j, w] : g.adj[i]) {
      if (i > j) continue;
      if (comm[i] == comm[j]) {
        out.internal[comm[i]] += w;
      } else {
        links[comm[i]][comm[j]] += w;
        links[comm[j]][comm[i]] += w;
      }
    }
  }
  for (std::size_t c = 0; c < n_comm; ++c) out.adj[c].assign(links[c].begin(), links[c].end());
  return out;
}

}  // namespace

std::vector<std::size_t> louvain(const WeightedNetwork& net, LouvainOptions opts) {
  const std::size_t n = net.nodes.size();
  std::vector<std::size_t> membership(n);
  std::iota(membership.begin(), membership.end(), 0);
  double m = 0.0;
  for (const auto& [_, w] : net.edges) m += w;
  if (n == 0 || m <= 0.0) return membership;

  std::mt19937_64 rng(opts.seed);
  LevelGraph g = level_from(net);
  double q = level_modularity(g, std::vector<std::size_t>(membership), m);
  for (;;) {
    std::vector<std::size_t> comm(g.size());
    std::iota(comm.begin(), comm.end(), 0);
    if (!one_level(g, comm, m, rng, opts.min_gain)) break;
    const std::size_t n_comm = renumber(comm);
    for (auto& c : membership) c = comm[c];
    g = aggregate(g, comm, n_comm);
    std::vector<std::size_t> identity(g.size());
    std::iota(identity.begin(), identity.end(), 0);
    const double q_new = level_modularity(g, identity, m);
    if (q_new - q < opts.min_gain) break;
    q = q_new;
  }
  renumber(membership);
  return membership;
}

double modularity(const WeightedNetwork& net, std::span<const std::size_t> community) {
  if (community.size() != net.nodes.size()) throw DomainError("partition size mismatch");
  double m = 0.0;
  std::map<std::size_t, double> in, tot;
  for (const auto& [e, w] : net.edges) {
    m += w;
    tot[community[e.first]] += w;
    tot[community[e.second]] += w;
    if (community[e.first] == community[e.second]) in[community[e.first]] += w;
  }
  if (m <= 0.0) return 0.0;
  double q = 0.0;
  for (const auto& [c, t] : tot) q += in[c] / m - (t / (2.0 * m)) * (t / (2.0 * m));
  return q;
}

GangReport detect_gangs(const WeightedNetwork& net, LouvainOptions opts) {
  if (net.nodes.empty()) throw DataError("empty network");
  GangReport report;
  report.partition = louvain(net, opts);
  report.modularity = modularity(net, report.partition);

  std::vector<std::size_t> degree(net.nodes.size(), 0);
  for (const auto& [e, _] : net.edges) {
    ++degree[e.first];
    ++degree[e.second];
  }
  std::map<std::size_t, std::set<std::size_t>> groups;
  for (std::size_t i = 0; i < net.nodes.size(); ++i) {
    if (degree[i] == 1) {
      report.pruned.insert(net.nodes[i]);
      continue;
    }
    groups[report.partition[i]].insert(i);
  }
  for (const auto& [_, members] : groups) {
    if (members.size() < 2) continue;
    Gang gang;
    for (const auto i : members) gang.members.insert(net.nodes[i]);
    for (const auto& [e, w] : net.edges) {
      if (members.contains(e.first) && members.contains(e.second)) {
        gang.edges.emplace_back(net.nodes[e.first], net.nodes[e.second], w);
        gang.intra_weight += w;
      }
    }
    report.communities.push_back(std::move(gang));
  }
  std::stable_sort(report.communities.begin(), report.communities.end(),
                   [](const Gang& a, const Gang& b) { return a.members.size() > b.members.size(); });
  return report;
}

GangAnalysis analyze_gangs(const VotingGraph& graph, GangOptions opts) {
  GangAnalysis out;
  out.features = candidate_egonet_features(graph);
  out.fit = fit_edpl(out.features);
  out.scores = outlierness(out.features, out.fit, opts.log_base);
  out.anomalies = near_clique_anomalies(out.features, out.fit, out.scores, opts.outlier_fraction);
  if (!out.anomalies.empty()) {
    out.network = reconstruct_weighted_network(graph, out.anomalies);
    if (!out.network->nodes.empty()) out.report = detect_gangs(*out.network, opts.louvain);
  }
  return out;
}

}  // namespace dposf
