#include "dposf/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "dposf/calendar.hpp"
#include "dposf/clustering.hpp"
#include "dposf/digest.hpp"
#include "dposf/errors.hpp"
#include "dposf/gangs.hpp"
#include "dposf/metrics.hpp"
#include "dposf/motifs.hpp"
#include "dposf/replay.hpp"
#include "dposf/synth.hpp"

namespace dposf {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// Thrown for unreadable or missing inputs and unwritable outputs; maps to the usage exit code.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string num(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return ec == std::errc{} ? std::string(buf, ptr) : std::string("nan");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Output {
 public:
  explicit Output(std::string dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw UsageError("cannot create output directory " + dir_ + ": " + ec.message());
  }

  void write(const std::string& name, const std::string& text) const {
    const auto path = fs::path(dir_) / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot write " + path.string());
    out << text;
  }

  void write_json(const std::string& name, const json& doc) const { write(name, doc.dump(1) + "\n"); }

  std::string path(const std::string& name) const { return (fs::path(dir_) / name).string(); }

 private:
  std::string dir_;
};

class Csv {
 public:
  explicit Csv(std::initializer_list<std::string_view> header) { row_of(header); }

  template <typename... T>
  void row(const T&... cells) {
    bool first = true;
    ((text_ += (first ? "" : ","), text_ += cell(cells), first = false), ...);
    text_ += '\n';
  }

  const std::string& str() const noexcept { return text_; }

 private:
  void row_of(std::initializer_list<std::string_view> cells) {
    bool first = true;
    for (auto c : cells) {
      if (!first) text_ += ',';
      text_ += c;
      first = false;
    }
    text_ += '\n';
  }

  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(const AccountName& n) { return n.str(); }
  static std::string cell(double v) { return num(v); }
  static std::string cell(bool b) { return b ? "1" : "0"; }
  template <typename I>
    requires std::is_integral_v<I>
  static std::string cell(I v) {
    return std::to_string(v);
  }

  std::string text_;
};

json names(const auto& range) {
  json a = json::array();
  for (const auto& n : range) a.push_back(n.str());
  return a;
}

std::string entropy_label(const std::optional<std::size_t>& n) { return n ? "top" + std::to_string(*n) : "all"; }

json params_json(Analysis a, const AnalysisParams& p) {
  json out;
  if (a == Analysis::Metrics || a == Analysis::All) {
    json ns = json::array();
    for (const auto& n : p.entropy_n) ns.push_back(entropy_label(n));
    out["entropy_n"] = ns;
    out["entropy_global"] = p.entropy_global;
    out["snapshot_cadence"] = p.cadence;
  }
  if (a == Analysis::Cluster || a == Analysis::All) {
    out["theta"] = p.theta;
    out["top_stake_pct"] = p.top_stake_pct;
    out["snapshot_cadence"] = p.cadence;
  }
  if (a == Analysis::Motifs || a == Analysis::All) {
    out["window_days"] = p.window_days;
    out["strict_eight"] = p.strict_eight;
  }
  if (a == Analysis::Gangs || a == Analysis::All) {
    out["outlier_pct"] = p.outlier_pct;
    out["seed"] = p.seed;
  }
  return out.is_null() ? json::object() : out;
}

// The command line that reproduces a report, in canonical flag order.
std::string command_line(const AnalyzeRequest& r) {
  const auto& p = r.params;
  std::string cmd = "dposf " + std::string(to_string(r.analysis)) + " --trace " + r.trace_path;
  if (r.headers_path) cmd += " --headers " + *r.headers_path;
  const Analysis a = r.analysis;
  if (a == Analysis::Metrics || a == Analysis::All) {
    std::string ns;
    for (const auto& n : p.entropy_n) ns += (ns.empty() ? "" : ",") + (n ? std::to_string(*n) : std::string("all"));
    cmd += " --entropy-n " + ns;
    if (p.entropy_global) cmd += " --entropy-global";
  }
  if (a == Analysis::Metrics || a == Analysis::Cluster || a == Analysis::All) cmd += " --snapshot-cadence " + p.cadence;
  if (a == Analysis::Cluster || a == Analysis::All) cmd += " --theta " + num(p.theta) + " --top-stake-pct " + num(p.top_stake_pct);
  if (a == Analysis::Motifs || a == Analysis::All) {
    cmd += " --window-days " + std::to_string(p.window_days);
    if (p.strict_eight) cmd += " --strict-eight";
  }
  if (a == Analysis::Gangs || a == Analysis::All) cmd += " --outlier-pct " + num(p.outlier_pct) + " --seed " + std::to_string(p.seed);
  return cmd;
}

json input_entry(const std::string& role, const std::string& path) {
  return {{"role", role}, {"path", path}, {"digest", file_digest(path)}};
}

json manifest(const std::string& command, json inputs, json params) {
  return {{"command", command}, {"inputs", std::move(inputs)}, {"params", std::move(params)}, {"version", std::string(kToolVersion)}};
}

// ---------------------------------------------------------------------------------------------
// Loaded inputs

struct Inputs {
  std::vector<Action> trace;
  std::optional<std::vector<BlockHeader>> headers;
  json manifest_inputs = json::array();
};

Inputs load_inputs(const AnalyzeRequest& r) {
  Inputs in;
  {
    std::istringstream s(read_file(r.trace_path));
    in.trace = read_trace(s);
  }
  check_trace_order(in.trace);
  in.manifest_inputs.push_back(input_entry("trace", r.trace_path));
  if (r.headers_path) {
    std::istringstream s(read_file(*r.headers_path));
    in.headers = read_headers(s);
    in.manifest_inputs.push_back(input_entry("headers", *r.headers_path));
  }
  return in;
}

// Snapshots at each sample time, plus stakeholder totals the snapshots do not carry.
struct Sampled {
  std::vector<VotingSnapshot> snapshots;
  std::vector<std::pair<std::size_t, double>> stakeholders;  // (accounts with stake, staked tokens)
  VotingState final_state;
  ReplayLog log;
};

Sampled sample(std::span<const Action> trace, const std::string& cadence_text) {
  const auto cadence = SnapshotCadence::parse(cadence_text);
  Sampled out;
  if (trace.empty()) return out;
  const auto times = sample_times(trace.front().timestamp, trace.back().timestamp, cadence);
  VotingState& state = out.final_state;
  std::size_t i = 0;
  auto take = [&](Timestamp t) {
    out.snapshots.push_back(snapshot(state, t));
    std::size_t holders = 0;
    double tokens = 0.0;
    for (const auto& [_, rec] : state.accounts()) {
      if (rec.stake.units() > 0) {
        ++holders;
        tokens += rec.stake.tokens();
      }
    }
    out.stakeholders.emplace_back(holders, tokens);
  };
  for (const Timestamp t : times) {
    for (; i < trace.size() && trace[i].timestamp <= t; ++i) {
      const auto r = state.apply(trace[i]);
      if (r.rejection) out.log.rejected.push_back({i, trace[i].block_height, trace[i].sequence, *r.rejection});
      if (r.notice) out.log.notices.push_back({i, trace[i].block_height, trace[i].sequence, *r.notice});
    }
    take(t);
  }
  for (; i < trace.size(); ++i) state.apply(trace[i]);
  return out;
}

json log_json(const std::vector<RejectedAction>& entries) {
  json a = json::array();
  for (const auto& e : entries) a.push_back({{"index", e.index}, {"block", e.block_height}, {"seq", e.sequence}, {"reason", e.reason}});
  return a;
}

// ---------------------------------------------------------------------------------------------
// replay

void run_replay(const Inputs& in, const Output& out, const json& man) {
  const auto result = replay(in.trace);
  const auto& st = result.state;
  const std::string state_text = canonical_state_json(st);
  out.write("state.json", state_text + "\n");
  json top = names(top_n_producers(st, kProducersPerRound));
  out.write_json("replay.json", {{"manifest", man},
                                 {"actions", in.trace.size()},
                                 {"rejected", log_json(result.log.rejected)},
                                 {"notices", log_json(result.log.notices)},
                                 {"accounts", st.accounts().size()},
                                 {"candidates", st.candidates().size()},
                                 {"proxies", st.proxies().size()},
                                 {"top21", top},
                                 {"state_digest", content_digest(state_text)}});
}

// ---------------------------------------------------------------------------------------------
// metrics

json fit_json(std::span<const double> values) {
  try {
    const auto f = powerlaw_exponent(values);
    return {{"alpha", f.alpha}, {"r_squared", f.r_squared}, {"bins", f.bins_used}, {"n", values.size()}};
  } catch (const std::exception& e) {
    return {{"error", e.what()}, {"n", values.size()}};
  }
}

json run_metrics(const Inputs& in, const AnalysisParams& p, const Output& out, const json& man) {
  const Sampled s = sample(in.trace, p.cadence);

  Csv fig2({"timestamp", "voters", "stakeholders", "voter_stake_tokens", "staked_tokens"});
  for (std::size_t i = 0; i < s.snapshots.size(); ++i) {
    const auto& snap = s.snapshots[i];
    std::size_t voters = 0;
    double stake = 0.0;
    for (const auto& [_, v] : snap.per_voter) {
      if (!v.votes()) continue;
      ++voters;
      stake += v.stake.tokens();
    }
    fig2.row(snap.taken_at, voters, s.stakeholders[i].first, stake, s.stakeholders[i].second);
  }
  out.write("fig2_voters.csv", fig2.str());

  json report = {{"manifest", man}, {"snapshots", s.snapshots.size()}};
  if (!s.snapshots.empty()) {
    const auto& last = s.snapshots.back();
    const auto dist = stake_distribution(last, true);
    Csv fig3a({"rank", "account", "stake_tokens"});
    std::vector<double> stakes;
    for (std::size_t r = 0; r < dist.size(); ++r) {
      fig3a.row(r + 1, dist[r].first, dist[r].second.tokens());
      if (dist[r].second.units() > 0) stakes.push_back(dist[r].second.tokens());
    }
    out.write("fig3a_stake_distribution.csv", fig3a.str());

    std::vector<std::pair<AccountName, double>> received(last.per_candidate.begin(), last.per_candidate.end());
    std::stable_sort(received.begin(), received.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    Csv fig3b({"rank", "candidate", "weight"});
    std::vector<double> weights;
    for (std::size_t r = 0; r < received.size(); ++r) {
      fig3b.row(r + 1, received[r].first, received[r].second);
      if (received[r].second > 0.0) weights.push_back(received[r].second);
    }
    out.write("fig3b_received_weight.csv", fig3b.str());

    json shares = json::object();
    if (!stakes.empty()) {
      for (double pct : {1.0, 5.0, 10.0}) shares[num(pct)] = top_share(stakes, pct / 100.0);
    }
    report["stake"] = {{"voters", dist.size()}, {"powerlaw", fit_json(stakes)}, {"top_share_pct", shares}};
    report["received_weight"] = {{"candidates", received.size()}, {"powerlaw", fit_json(weights)}};
  }

  const auto px = proxy_share_series(s.snapshots);
  Csv fig4({"timestamp", "accounts_all", "accounts_proxied", "stake_all", "stake_proxied", "weight_all", "weight_proxied"});
  Csv fig5({"timestamp", "account_share", "stake_share", "weight_share"});
  for (std::size_t i = 0; i < px.accounts.points.size(); ++i) {
    const auto& a = px.accounts.points[i];
    const auto& st = px.stake.points[i];
    const auto& w = px.weight.points[i];
    fig4.row(a.timestamp, a.all_value, a.proxied_value, st.all_value, st.proxied_value, w.all_value, w.proxied_value);
    fig5.row(a.timestamp, a.share, st.share, w.share);
  }
  out.write("fig4_proxy_stats.csv", fig4.str());
  out.write("fig5_proxy_shares.csv", fig5.str());
  if (!px.weight.points.empty()) {
    report["proxy_share_final"] = {{"accounts", px.accounts.points.back().share},
                                   {"stake", px.stake.points.back().share},
                                   {"weight", px.weight.points.back().share}};
  }

  if (in.headers) {
    const auto turnover = producer_turnover(*in.headers);
    Csv fig6a({"month", "distinct_producers", "cumulative_producers"});
    for (std::size_t i = 0; i < turnover.monthly_distinct.size(); ++i) {
      fig6a.row(turnover.monthly_distinct[i].first.str(), turnover.monthly_distinct[i].second, turnover.cumulative_distinct[i].second);
    }
    out.write("fig6a_producers.csv", fig6a.str());
    Csv fig6b({"producer", "active_days"});
    for (const auto& [prod, days] : turnover.active_days) fig6b.row(prod, days);
    out.write("fig6b_active_days.csv", fig6b.str());

    std::string header = "month";
    for (const auto& n : p.entropy_n) header += ",H_" + entropy_label(n);
    header += '\n';
    std::string rows;
    json entropy = json::array();
    for (const auto& prod : monthly_production(*in.headers)) {
      rows += prod.month.str();
      json row = {{"month", prod.month.str()}, {"blocks", prod.total()}, {"producers", prod.counts.size()}};
      for (const auto& n : p.entropy_n) {
        const double h = production_entropy(prod, {n, !p.entropy_global});
        rows += "," + num(h);
        row["H_" + entropy_label(n)] = h;
      }
      rows += '\n';
      entropy.push_back(std::move(row));
    }
    out.write("fig7_entropy.csv", header + rows);
    report["entropy"] = std::move(entropy);
    report["producers_total"] = turnover.active_days.size();
  }
  out.write_json("metrics.json", report);
  return report;
}

// ---------------------------------------------------------------------------------------------
// cluster

struct ClusterGroup {
  std::string label;
  std::set<AccountName> population;
  std::vector<VoterCluster> clusters;
  VotingRecords records;
};

json run_cluster(const Inputs& in, const AnalysisParams& p, const Output& out, const json& man,
                 std::set<AccountName>* flagged) {
  const Sampled s = sample(in.trace, p.cadence);
  const auto creation = creation_map(s.final_state);
  json report = {{"manifest", man}, {"sample_times", s.snapshots.size()}};

  std::vector<ClusterGroup> groups;
  if (!s.snapshots.empty()) {
    const auto& last = s.snapshots.back();
    ClusterGroup rich{"stakeholders", top_stakeholders(last, p.top_stake_pct / 100.0), {}, {}};
    ClusterGroup prox{"proxies", {}, {}, {}};
    for (const auto& [name, v] : last.per_voter) {
      if (v.is_proxy) prox.population.insert(name);
    }
    groups.push_back(std::move(rich));
    groups.push_back(std::move(prox));
  }

  Csv fig10({"group", "cluster", "creator", "members", "single_creator"});
  for (auto& g : groups) {
    g.records = sample_voting_records(s.snapshots, g.population);
    g.clusters = cluster_voters(g.population, g.records, p.theta);
    const auto concord = creator_concordance(g.clusters, creation);
    const auto& last = s.snapshots.back();

    auto stake_of = [&](const VoterCluster& c) {
      double t = 0.0;
      for (const auto& m : c.members) {
        if (auto it = last.per_voter.find(m); it != last.per_voter.end()) t += it->second.stake.tokens() + it->second.proxied_stake.tokens();
      }
      return t;
    };
    json arr = json::array();
    std::vector<std::size_t> by_stake(g.clusters.size());
    for (std::size_t i = 0; i < g.clusters.size(); ++i) {
      const auto& c = g.clusters[i];
      json creators = json::object();
      for (const auto& [cr, count] : concord[i].creators) {
        creators[cr.str()] = count;
        fig10.row(g.label, i, cr, count, concord[i].single_creator);
      }
      arr.push_back({{"id", i},
                     {"seed", c.seed.str()},
                     {"members", names(c.members)},
                     {"creators", creators},
                     {"single_creator", concord[i].single_creator},
                     {"mean_similarity", mean_intra_similarity(c, g.records)},
                     {"stake_tokens", stake_of(c)}});
      by_stake[i] = i;
      if (flagged) flagged->insert(c.members.begin(), c.members.end());
    }
    std::stable_sort(by_stake.begin(), by_stake.end(),
                     [&](std::size_t a, std::size_t b) { return stake_of(g.clusters[a]) > stake_of(g.clusters[b]); });
    if (by_stake.size() > 10) by_stake.resize(10);

    // Vote sets per sample time and voteproducer times for the ten richest clusters.
    Csv votes({"timestamp", "cluster", "voter", "candidate"});
    Csv times({"cluster", "voter", "timestamp"});
    std::map<AccountName, std::size_t> member_cluster;
    for (const std::size_t ci : by_stake) {
      for (const auto& m : g.clusters[ci].members) member_cluster.emplace(m, ci);
    }
    for (std::size_t k = 0; k < s.snapshots.size(); ++k) {
      for (const auto& [m, ci] : member_cluster) {
        for (const auto& c : g.records.at(m).sets[k]) votes.row(s.snapshots[k].taken_at, ci, m, c);
      }
    }
    for (const auto& a : in.trace) {
      if (a.kind() != ActionKind::VoteProducer) continue;
      if (auto it = member_cluster.find(a.actor); it != member_cluster.end()) times.row(it->second, a.actor, a.timestamp);
    }
    const std::string fig = g.label == "proxies" ? "fig11_proxy" : "fig9_stakeholder";
    out.write(fig + "_cluster_votes.csv", votes.str());
    out.write(fig + "_vote_times.csv", times.str());
    report[g.label] = {{"population", g.population.size()}, {"clusters", std::move(arr)}};
  }
  out.write("fig10_creators.csv", fig10.str());
  out.write_json("clusters.json", report);
  return report;
}

// ---------------------------------------------------------------------------------------------
// motifs

json instance_json(const MotifInstance& m) {
  json roles;
  const auto& p = m.participants;
  switch (m.shape) {
    case MotifShape::Linear:
      roles = {{"a", p[0].str()}, {"b", p[1].str()}};
      break;
    case MotifShape::Triangular:
      roles = {{"a", p[0].str()}, {"proxy", p[1].str()}, {"b", p[2].str()}};
      break;
    case MotifShape::Eight:
      roles = {{"a", p[0].str()}, {"proxy_a", p[1].str()}, {"b", p[2].str()}, {"proxy_b", p[3].str()}};
      break;
  }
  return {{"shape", std::string(to_string(m.shape))},
          {"participants", names(p)},
          {"roles", std::move(roles)},
          {"timestamps", {m.witness[0].timestamp, m.witness[1].timestamp}},
          {"window_start", m.window_start},
          {"month", m.month().str()}};
}

json run_motifs(const Inputs& in, const AnalysisParams& p, const Output& out, const json& man,
                std::set<AccountName>* flagged) {
  const auto events = build_vote_events(in.trace);
  const MotifOptions opts{static_cast<Timestamp>(p.window_days) * kSecondsPerDay, p.strict_eight};
  std::vector<MotifInstance> all;
  for (auto detect : {detect_linear, detect_triangular, detect_eight}) {
    auto found = detect(events, opts);
    all.insert(all.end(), found.begin(), found.end());
  }
  std::string lines = json{{"manifest", man}}.dump() + "\n";
  for (const auto& m : all) {
    lines += instance_json(m).dump() + "\n";
    if (flagged) {
      flagged->insert(m.participants.front());
      flagged->insert(m.shape == MotifShape::Linear ? m.participants[1] : m.participants[2]);
    }
  }
  out.write("motifs.jsonl", lines);

  std::optional<YearMonth> from, to;
  if (!in.trace.empty()) {
    from = month_of(in.trace.front().timestamp);
    to = month_of(in.trace.back().timestamp);
  }
  const auto series = motif_series(all, from, to);
  Csv fig12({"month", "linear", "triangular", "eight"});
  json monthly = json::array();
  MotifCounts total;
  for (const auto& [m, c] : series) {
    fig12.row(m.str(), c.linear, c.triangular, c.eight);
    monthly.push_back({{"month", m.str()}, {"linear", c.linear}, {"triangular", c.triangular}, {"eight", c.eight}});
    total.linear += c.linear;
    total.triangular += c.triangular;
    total.eight += c.eight;
  }
  out.write("fig12b_motifs.csv", fig12.str());
  const auto relation = motif_relation_graph(all);
  json report = {{"manifest", man},
                 {"vote_events", events.size()},
                 {"counts", {{"linear", total.linear}, {"triangular", total.triangular}, {"eight", total.eight}}},
                 {"monthly", std::move(monthly)},
                 {"relation_graph",
                  {{"nodes", relation.size()},
                   {"average_clustering", average_clustering(relation)},
                   {"components", connected_components(relation).size()}}}};
  out.write_json("motifs.json", report);
  return report;
}

// ---------------------------------------------------------------------------------------------
// gangs

json run_gangs(const Inputs& in, const AnalysisParams& p, const Output& out, const json& man,
               std::set<AccountName>* anomalies_out, std::set<AccountName>* gang_members) {
  const auto graph = build_voting_network(in.trace);
  Csv fig13({"src", "dst", "src_candidate", "dst_candidate", "frequency", "duration", "avg_weight"});
  for (const auto& [e, st] : graph.edges) {
    fig13.row(e.first, e.second, graph.is_candidate(e.first), graph.is_candidate(e.second), st.frequency, st.duration, st.avg_weight);
  }
  out.write("fig13_network.csv", fig13.str());

  GangOptions opts;
  opts.outlier_fraction = p.outlier_pct / 100.0;
  opts.louvain.seed = p.seed;
  const auto g = analyze_gangs(graph, opts);
  const std::set<AccountName> anomaly_set(g.anomalies.begin(), g.anomalies.end());

  Csv fig14({"node", "neighbors", "edges", "expected_edges", "score", "above_line", "anomaly"});
  json nodes = json::array();
  for (const auto& f : g.features) {
    const double expected = g.fit.expected(f.neighbors);
    const double score = g.scores.count(f.node) ? g.scores.at(f.node) : 0.0;
    const bool above = static_cast<double>(f.edges) > expected;
    fig14.row(f.node, f.neighbors, f.edges, expected, score, above, anomaly_set.contains(f.node));
    nodes.push_back({{"node", f.node.str()}, {"N", f.neighbors}, {"E", f.edges}, {"score", score}});
  }
  out.write("fig14_oddball.csv", fig14.str());

  json edges = json::array();
  if (g.network) {
    for (const auto& [ij, w] : g.network->edges) {
      edges.push_back({{"a", g.network->nodes[ij.first].str()}, {"b", g.network->nodes[ij.second].str()}, {"weight", w}});
    }
  }
  json communities = json::array();
  for (const auto& c : g.report.communities) {
    communities.push_back({{"members", names(c.members)}, {"intra_weight", c.intra_weight}, {"edges", c.edges.size()}});
    if (gang_members) gang_members->insert(c.members.begin(), c.members.end());
  }
  if (anomalies_out) anomalies_out->insert(anomaly_set.begin(), anomaly_set.end());
  json report = {{"manifest", man},
                 {"network", {{"nodes", graph.nodes.size()}, {"edges", graph.edges.size()}}},
                 {"fit", {{"C", g.fit.c}, {"alpha", g.fit.alpha}, {"r_squared", g.fit.r_squared}}},
                 {"scores", std::move(nodes)},
                 {"anomalies", names(g.anomalies)},
                 {"reconstructed_edges", std::move(edges)},
                 {"communities", std::move(communities)},
                 {"pruned", names(g.report.pruned)},
                 {"modularity", g.report.modularity}};
  out.write_json("gangs.json", report);
  return report;
}

json overlap_summary(const std::map<std::string, std::set<AccountName>>& sets) {
  json sizes = json::object();
  json overlaps = json::array();
  for (auto i = sets.begin(); i != sets.end(); ++i) {
    sizes[i->first] = i->second.size();
    for (auto j = std::next(i); j != sets.end(); ++j) {
      std::vector<AccountName> both;
      std::set_intersection(i->second.begin(), i->second.end(), j->second.begin(), j->second.end(), std::back_inserter(both));
      overlaps.push_back({{"a", i->first}, {"b", j->first}, {"shared", both.size()}});
    }
  }
  return {{"flagged", sizes}, {"overlaps", overlaps}};
}

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    body();
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const DomainError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const OverflowError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace

std::string_view to_string(Analysis a) noexcept {
  switch (a) {
    case Analysis::Replay:
      return "replay";
    case Analysis::Metrics:
      return "metrics";
    case Analysis::Cluster:
      return "cluster";
    case Analysis::Motifs:
      return "motifs";
    case Analysis::Gangs:
      return "gangs";
    case Analysis::All:
      return "all";
  }
  return "?";
}

std::vector<std::optional<std::size_t>> parse_entropy_n(std::string_view text) {
  std::vector<std::optional<std::size_t>> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const auto item = text.substr(0, comma);
    text = comma == std::string_view::npos ? std::string_view{} : text.substr(comma + 1);
    if (item == "all") {
      out.emplace_back(std::nullopt);
      continue;
    }
    std::size_t n = 0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), n);
    if (ec != std::errc{} || ptr != item.data() + item.size() || n == 0) {
      throw ConfigError("entropy-n: expected positive integers or 'all', got '" + std::string(item) + "'");
    }
    out.emplace_back(n);
  }
  if (out.empty()) throw ConfigError("entropy-n: empty list");
  return out;
}

void validate(const AnalysisParams& p) {
  if (!(p.theta > 0.0 && p.theta <= 1.0)) throw ConfigError("theta out of range (0, 1]");
  if (p.window_days < 1) throw ConfigError("window-days must be at least 1");
  if (!(p.top_stake_pct > 0.0 && p.top_stake_pct <= 100.0)) throw ConfigError("top-stake-pct out of range (0, 100]");
  if (!(p.outlier_pct > 0.0 && p.outlier_pct <= 100.0)) throw ConfigError("outlier-pct out of range (0, 100]");
  if (p.entropy_n.empty()) throw ConfigError("entropy-n: empty list");
  SnapshotCadence::parse(p.cadence);
}

int cmd_generate(const GenerateRequest& req, std::ostream& err) {
  return guarded(err, [&] {
    GenConfig config = parse_gen_config(read_file(req.config_path));
    if (req.seed) config.seed = *req.seed;
    const Output out(req.out_dir);
    const auto ledger = generate_ledger(config);

    std::ostringstream trace_text, header_text;
    write_trace(trace_text, ledger.trace);
    write_headers(header_text, ledger.headers);
    out.write("trace.jsonl", trace_text.str());
    out.write("headers.jsonl", header_text.str());

    const std::string config_text = format_gen_config(config);
    std::string command = "dposf generate --config " + req.config_path;
    if (req.seed) command += " --seed " + std::to_string(*req.seed);
    const json man = manifest(command, json::array({input_entry("config", req.config_path)}), {{"seed", config.seed}});

    json truth = json::parse(truth_json(ledger.truth, content_digest(trace_text.str()), config_text));
    truth["manifest"] = man;
    out.write_json("truth.json", truth);
    out.write_json("manifest.json", {{"manifest", man},
                                     {"outputs",
                                      {{"trace.jsonl", content_digest(trace_text.str())},
                                       {"headers.jsonl", content_digest(header_text.str())}}},
                                     {"actions", ledger.trace.size()},
                                     {"headers", ledger.headers.size()},
                                     {"plants", ledger.truth.plants.size()}});
  });
}

int cmd_analyze(const AnalyzeRequest& req, std::ostream& err) {
  return guarded(err, [&] {
    validate(req.params);
    const Inputs in = load_inputs(req);
    const Output out(req.out_dir);
    const auto params_for = [&](Analysis a) { return params_json(a, req.params); };
    const json man = manifest(command_line(req), in.manifest_inputs, params_for(req.analysis));
    switch (req.analysis) {
      case Analysis::Replay:
        run_replay(in, out, man);
        break;
      case Analysis::Metrics:
        run_metrics(in, req.params, out, man);
        break;
      case Analysis::Cluster:
        run_cluster(in, req.params, out, man, nullptr);
        break;
      case Analysis::Motifs:
        run_motifs(in, req.params, out, man, nullptr);
        break;
      case Analysis::Gangs:
        run_gangs(in, req.params, out, man, nullptr, nullptr);
        break;
      case Analysis::All: {
        std::map<std::string, std::set<AccountName>> flagged;
        json sections = json::object();
        run_replay(in, out, man);
        auto section = [&](const std::string& name, auto&& fn) {
          try {
            fn();
            sections[name] = "ok";
          } catch (const DataError& e) {
            // A ledger too small for one analysis should not block the others.
            sections[name] = std::string("error: ") + e.what();
          }
        };
        section("metrics", [&] { run_metrics(in, req.params, out, man); });
        section("cluster", [&] { run_cluster(in, req.params, out, man, &flagged["cluster_members"]); });
        section("motifs", [&] { run_motifs(in, req.params, out, man, &flagged["motif_voters"]); });
        section("gangs", [&] {
          run_gangs(in, req.params, out, man, &flagged["near_clique_anomalies"], &flagged["gang_members"]);
        });
        for (const auto* key : {"cluster_members", "motif_voters", "near_clique_anomalies", "gang_members"}) flagged[key];
        json summary = overlap_summary(flagged);
        summary["manifest"] = man;
        summary["sections"] = std::move(sections);
        out.write_json("summary.json", summary);
        break;
      }
    }
  });
}

PairScore pairwise_score(const std::vector<Group>& predicted, const std::vector<Group>& truth,
                         const std::set<AccountName>* focus) {
  using Pair = std::pair<AccountName, AccountName>;
  auto pairs_of = [](const std::vector<Group>& groups) {
    std::set<Pair> out;
    for (const auto& g : groups) {
      for (auto i = g.begin(); i != g.end(); ++i) {
        for (auto j = std::next(i); j != g.end(); ++j) out.emplace(*i, *j);
      }
    }
    return out;
  };
  const auto truth_pairs = pairs_of(truth);
  auto pred_pairs = pairs_of(predicted);
  if (focus) {
    std::erase_if(pred_pairs, [&](const Pair& pr) { return !focus->contains(pr.first) && !focus->contains(pr.second); });
  }
  PairScore s;
  s.predicted = pred_pairs.size();
  s.actual = truth_pairs.size();
  for (const auto& pr : pred_pairs) s.true_positive += truth_pairs.contains(pr);
  s.precision = s.predicted ? static_cast<double>(s.true_positive) / static_cast<double>(s.predicted) : 0.0;
  s.recall = s.actual ? static_cast<double>(s.true_positive) / static_cast<double>(s.actual) : 0.0;
  s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

PairScore set_score(const std::set<std::string>& predicted, const std::set<std::string>& truth) {
  PairScore s;
  s.predicted = predicted.size();
  s.actual = truth.size();
  for (const auto& x : predicted) s.true_positive += truth.contains(x);
  s.precision = s.predicted ? static_cast<double>(s.true_positive) / static_cast<double>(s.predicted) : 0.0;
  s.recall = s.actual ? static_cast<double>(s.true_positive) / static_cast<double>(s.actual) : 0.0;
  s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

namespace {

json score_json(const PairScore& s) {
  return {{"true_positive", s.true_positive}, {"predicted", s.predicted}, {"actual", s.actual},
          {"precision", s.precision},          {"recall", s.recall},       {"f1", s.f1}};
}

std::optional<json> load_report(const std::string& dir, const std::string& name, const std::string& digest, std::string& mismatch) {
  const auto path = (fs::path(dir) / name).string();
  if (!fs::exists(path)) return std::nullopt;
  const std::string text = read_file(path);
  json doc;
  if (name.ends_with(".jsonl")) {
    std::istringstream in(text);
    std::string line;
    doc = json::array();
    while (std::getline(in, line)) {
      if (!line.empty()) doc.push_back(json::parse(line));
    }
    if (doc.empty()) throw DataError(name + ": empty report");
  } else {
    doc = json::parse(text);
  }
  const json& man = doc.is_array() ? doc.front().at("manifest") : doc.at("manifest");
  for (const auto& input : man.at("inputs")) {
    if (input.at("role") == "trace" && input.at("digest") != digest) {
      mismatch = name + " was produced from trace " + input.at("digest").get<std::string>() + ", truth expects " + digest;
    }
  }
  return doc;
}

std::string motif_key(std::string_view shape, const json& participants) {
  std::string key(shape);
  for (const auto& p : participants) key += " " + p.get<std::string>();
  return key;
}

}  // namespace

int cmd_score_truth(const ScoreRequest& req, std::ostream& err) {
  int code = kExitOk;
  const int guard = guarded(err, [&] {
    const auto truth_file = parse_truth_json(read_file(req.truth_path));
    const auto& truth = truth_file.truth;
    std::string mismatch;
    std::optional<json> clusters, gangs, motifs;
    try {
      clusters = load_report(req.report_dir, "clusters.json", truth_file.trace_digest, mismatch);
      gangs = load_report(req.report_dir, "gangs.json", truth_file.trace_digest, mismatch);
      motifs = load_report(req.report_dir, "motifs.jsonl", truth_file.trace_digest, mismatch);
    } catch (const json::exception& e) {
      throw DataError(std::string("malformed report: ") + e.what());
    }
    if (!mismatch.empty()) {
      err << "digest mismatch: " << mismatch << '\n';
      code = kExitUsage;
      return;
    }
    if (!clusters && !gangs && !motifs) throw UsageError("no reports found in " + req.report_dir);

    auto groups_from = [](const json& arr) {
      std::vector<Group> out;
      for (const auto& c : arr) {
        Group g;
        for (const auto& m : c.at("members")) g.emplace(m.get<std::string>());
        out.push_back(std::move(g));
      }
      return out;
    };
    std::vector<Group> predicted_clusters, predicted_gangs;
    if (clusters && clusters->contains("stakeholders")) predicted_clusters = groups_from(clusters->at("stakeholders").at("clusters"));
    if (gangs) predicted_gangs = groups_from(gangs->at("communities"));
    std::set<std::string> predicted_motifs;
    if (motifs) {
      for (std::size_t i = 1; i < motifs->size(); ++i) {
        const auto& m = (*motifs)[i];
        predicted_motifs.insert(motif_key(m.at("shape").get<std::string>(), m.at("participants")));
      }
    }

    json kinds = json::object();
    std::map<PlantKind, std::vector<const PlantTruth*>> by_kind;
    for (const auto& pt : truth.plants) by_kind[pt.kind].push_back(&pt);
    for (const auto& [kind, plants] : by_kind) {
      std::vector<Group> groups;
      std::set<AccountName> focus;
      std::set<std::string> truth_motifs;
      for (const auto* pt : plants) {
        groups.emplace_back(pt->members.begin(), pt->members.end());
        focus.insert(pt->members.begin(), pt->members.end());
        for (const auto& [shape, parts] : pt->motifs) {
          json a = names(parts);
          truth_motifs.insert(motif_key(to_string(shape), a));
        }
      }
      json entry = {{"plants", plants.size()}};
      if (kind == PlantKind::SimilarCluster && clusters) {
        entry["method"] = "cluster";
        entry["pairwise"] = score_json(pairwise_score(predicted_clusters, groups, &focus));
      }
      if ((kind == PlantKind::NearClique || kind == PlantKind::LinearGang) && gangs) {
        entry["method"] = "gangs";
        entry["pairwise"] = score_json(pairwise_score(predicted_gangs, groups, &focus));
      }
      if (!truth_motifs.empty() && motifs) {
        // Only detected instances touching this kind's members are charged against its precision.
        std::set<std::string> relevant;
        for (const auto& key : predicted_motifs) {
          std::istringstream words(key);
          std::string w;
          words >> w;
          while (words >> w) {
            if (focus.contains(AccountName(w))) {
              relevant.insert(key);
              break;
            }
          }
        }
        entry["motifs"] = score_json(set_score(relevant, truth_motifs));
      }
      kinds[std::string(to_string(kind))] = std::move(entry);
    }

    json overall = json::object();
    if (clusters) overall["cluster"] = score_json(pairwise_score(predicted_clusters, [&] {
      std::vector<Group> g;
      for (const auto& pt : truth.plants) {
        if (pt.kind == PlantKind::SimilarCluster) g.emplace_back(pt.members.begin(), pt.members.end());
      }
      return g;
    }()));
    if (gangs) overall["gangs"] = score_json(pairwise_score(predicted_gangs, [&] {
      std::vector<Group> g;
      for (const auto& pt : truth.plants) {
        if (pt.kind == PlantKind::NearClique || pt.kind == PlantKind::LinearGang) g.emplace_back(pt.members.begin(), pt.members.end());
      }
      return g;
    }()));

    json inputs = json::array({input_entry("truth", req.truth_path)});
    for (const auto* name : {"clusters.json", "gangs.json", "motifs.jsonl"}) {
      const auto path = (fs::path(req.report_dir) / name).string();
      if (fs::exists(path)) inputs.push_back(input_entry("report", path));
    }
    const json man = manifest("dposf score --report-dir " + req.report_dir + " --truth " + req.truth_path, inputs, json::object());
    const Output out(req.out_dir);
    const json doc = {{"manifest", man}, {"kinds", kinds}, {"overall", overall}};
    out.write_json("score.json", doc);
    err << doc.at("kinds").dump(1) << '\n';
  });
  return guard != kExitOk ? guard : code;
}

}  // namespace dposf
