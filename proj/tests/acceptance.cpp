// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <unistd.h>

#include "dposf/cli.hpp"
#include "dposf/clustering.hpp"
#include "dposf/digest.hpp"
#include "dposf/gangs.hpp"
#include "dposf/metrics.hpp"
#include "dposf/motifs.hpp"
#include "dposf/replay.hpp"
#include "dposf/synth.hpp"
#include "oracles.hpp"
#include "trace_builder.hpp"

using namespace dposf;
namespace fs = std::filesystem;

namespace {

// Tolerances and limits.
constexpr double kWeightRelTol = 1e-12;
constexpr long double kReplayRelTol = 1e-9L;
constexpr double kEntropyTol = 1e-9;
constexpr double kNormTol = 1e-9;
constexpr double kClusterF1 = 0.9;
constexpr double kConcordanceShare = 0.8;
constexpr double kGangF1 = 0.9;
constexpr double kTopFraction = 0.10;
constexpr double kExpectedBlocks = 113.4;
constexpr double kSigmas = 3.0;

struct Outcome {
  bool ok = true;
  std::string detail;
  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

std::vector<WeightedNetwork> g_networks;  // every reconstruction made below, for the normalisation check

std::string node(const char* prefix, std::size_t i) {
  return std::string(prefix) + char('a' + i / 676 % 26) + char('a' + i / 26 % 26) + char('a' + i % 26);
}

// ---------------------------------------------------------------------------------------------

Outcome weight_formula() {
  Outcome o;
  std::mt19937_64 rng(101);
  for (int i = 0; i < 1000; ++i) {
    const auto units = std::uniform_int_distribution<std::int64_t>(1, 100'000'000'000)(rng);
    const int k = std::uniform_int_distribution<int>(2, 9)(rng);
    const int step = std::uniform_int_distribution<int>(0, 1500)(rng);
    const double idx = step / 52.0;
    const StakeAmount s(units);
    const double w = compute_vote_weight(s, idx);
    o.require(compute_vote_weight(s, idx + 1.0) == 2.0 * w, "doubling");
    const double wk = compute_vote_weight(StakeAmount(units * k), idx);
    o.require(std::fabs(wk - k * w) <= kWeightRelTol * wk, "linearity");

    const Timestamp t = kVoteEpoch + std::uniform_int_distribution<Timestamp>(0, 25LL * 365 * kSecondsPerDay)(rng);
    const long double want = oracle::weight(static_cast<long double>(units) / 10000.0L, t);
    const double got = vote_weight_at(s, t);
    o.require(std::fabs(static_cast<long double>(got) - want) / want <= kWeightRelTol, "oracle");
    o.require(vote_weight_at(s, t + 52 * 7 * kSecondsPerDay) == 2.0 * got, "doubling over 52 weeks");
  }
  return o;
}

Outcome replay_conservation() {
  Outcome o;
  std::mt19937_64 rng(202);
  std::size_t total = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    oracle::TraceShape shape;
    shape.actions = std::uniform_int_distribution<std::size_t>(500, 10'000)(rng);
    shape.accounts = std::uniform_int_distribution<std::size_t>(15, 80)(rng);
    const auto trace = oracle::random_trace(seed, shape);
    total += trace.size();
    const auto r = replay(trace);
    const auto want = oracle::candidate_weights(r.state);
    o.require(want.size() == r.state.candidates().size(), "candidate sets differ");
    for (const auto& [c, w] : r.state.candidates()) {
      const long double ref = want.at(c);
      const bool close = ref == 0.0L ? w == 0.0 : std::fabs(static_cast<long double>(w) - ref) / ref <= kReplayRelTol;
      o.require(close, "weight of " + c.str() + " in trace " + std::to_string(seed));
    }
    const auto again = replay(trace);
    o.require(content_digest(canonical_state_json(r.state)) == content_digest(canonical_state_json(again.state)),
              "digest differs on trace " + std::to_string(seed));
  }
  o.detail = o.ok ? std::to_string(total) + " actions" : o.detail;
  return o;
}

Outcome entropy() {
  Outcome o;
  MonthlyProduction uniform{YearMonth{2018, 7}, {}};
  for (std::size_t i = 0; i < 21; ++i) uniform.counts[AccountName(node("bp", i))] = 6;
  o.require(std::fabs(production_entropy(uniform) - std::log2(21.0)) <= kEntropyTol, "uniform 21");

  // The same through a generated round.
  std::vector<AccountName> producers;
  for (std::size_t i = 0; i < 21; ++i) producers.emplace_back(node("bp", i));
  const Elector elect = [&](Timestamp) { return producers; };
  const Timestamp genesis = 1'530'403'200;  // 2018-07-01
  std::vector<Timestamp> starts;
  for (int r = 0; r < 40; ++r) starts.push_back(genesis + r * kRoundSeconds);
  const auto months = monthly_production(generate_block_schedule(elect, starts, {.genesis = genesis}));
  o.require(months.size() == 1 && std::fabs(production_entropy(months[0]) - std::log2(21.0)) <= kEntropyTol, "schedule month");

  std::mt19937_64 rng(303);
  for (int trial = 0; trial < 200; ++trial) {
    MonthlyProduction m{YearMonth{2019, 1}, {}};
    const auto n = std::uniform_int_distribution<std::size_t>(1, 60)(rng);
    for (std::size_t i = 0; i < n; ++i) m.counts[AccountName(node("bp", i))] = std::uniform_int_distribution<std::int64_t>(1, 5000)(rng);
    MonthlyProduction scaled = m;
    const auto k = std::uniform_int_distribution<std::int64_t>(2, 1000)(rng);
    for (auto& [_, c] : scaled.counts) c *= k;
    for (std::optional<std::size_t> top : {std::optional<std::size_t>{}, std::optional<std::size_t>{21}}) {
      o.require(production_entropy(m, {top}) == production_entropy(scaled, {top}), "scale invariance");
    }
  }
  const MonthlyProduction single{YearMonth{2019, 2}, {{AccountName("solo"), 172'800}}};
  o.require(production_entropy(single) == 0.0, "single producer");
  return o;
}

Outcome clustering_equivalence() {
  Outcome o;
  std::mt19937_64 rng(404);
  std::size_t clusters = 0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto voters = std::uniform_int_distribution<std::size_t>(10, 200)(rng);
    const auto times = std::uniform_int_distribution<std::size_t>(3, 15)(rng);
    const auto protos = std::uniform_int_distribution<std::size_t>(2, 10)(rng);
    const double noise = std::uniform_real_distribution<double>(0.0, 0.2)(rng);
    const auto records = oracle::random_records(seed, voters, times, protos, noise);
    std::set<AccountName> population;
    for (const auto& [k, _] : records) population.insert(k);
    const std::vector<AccountName> ordered(population.begin(), population.end());
    const auto sim = oracle::similarity_matrix(ordered, records);
    for (double theta : {0.5, 0.9, 1.0}) {
      std::set<std::set<AccountName>> got;
      for (const auto& c : cluster_voters(population, records, theta)) got.insert(c.members);
      clusters += got.size();
      o.require(got == oracle::threshold_components(ordered, sim, theta), "instance " + std::to_string(seed));
    }
  }
  o.detail = o.ok ? std::to_string(clusters) + " clusters compared" : o.detail;
  return o;
}

Outcome planted_clusters() {
  Outcome o;
  GenConfig c;
  c.seed = 5;
  c.n_accounts = 20'500;  // ~1,000 active background voters at the default participation
  c.n_candidates = 150;
  c.duration_days = 120;
  for (std::size_t size : {3, 5, 7, 9, 10}) {
    PlantSpec p;
    p.kind = PlantKind::SimilarCluster;
    p.size = size;
    p.shared_creator = true;
    p.vote_jitter = 0.05;
    c.plants.push_back(p);
  }
  const auto g = generate_ledger(c);
  const auto series = replay_with_snapshots(g.trace, SnapshotCadence::every_month());
  const auto voters = voters_in(series.snapshots);
  const auto population = top_stakeholders(series.snapshots.back(), 0.05);
  const auto records = sample_voting_records(series.snapshots, population);
  const auto clusters = cluster_voters(population, records, 0.9);

  std::vector<std::set<AccountName>> predicted, truth;
  for (const auto& cl : clusters) predicted.push_back(cl.members);
  for (const auto& pt : g.truth.plants) truth.emplace_back(pt.members.begin(), pt.members.end());
  const double f1 = oracle::pair_f1(predicted, truth);
  o.require(f1 >= kClusterF1, "pairwise F1 " + std::to_string(f1));

  const auto concord = creator_concordance(clusters, creation_map(series.result.state));
  std::size_t flagged = 0;
  for (const auto& t : truth) {
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      if (clusters[i].members.contains(*t.begin())) {
        flagged += concord[i].single_creator;
        break;
      }
    }
  }
  const double share = static_cast<double>(flagged) / static_cast<double>(truth.size());
  o.require(share >= kConcordanceShare, "single-creator share " + std::to_string(share));
  char buf[128];
  std::snprintf(buf, sizeof buf, "F1 %.3f, single-creator %zu/%zu, %zu voters", f1, flagged, truth.size(), voters.size());
  if (o.ok) o.detail = buf;
  return o;
}

// Candidates voting each other directly and through proxies, with short gaps so windows fill up.
std::vector<Action> dense_motif_trace(std::uint64_t seed, std::size_t steps) {
  std::mt19937_64 rng(seed);
  testkit::TraceBuilder tb(1'535'760'000);
  const std::size_t nc = 70, np = 15, nv = 25;
  std::vector<std::string> cands, proxies, voters;
  for (std::size_t i = 0; i < nc; ++i) cands.push_back(node("cand", i));
  for (std::size_t i = 0; i < np; ++i) proxies.push_back(node("prox", i));
  for (std::size_t i = 0; i < nv; ++i) voters.push_back(node("vote", i));
  auto pick = [&](const std::vector<std::string>& v) { return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)]; };
  for (const auto& c : cands) tb.candidate(c, std::uniform_int_distribution<std::int64_t>(1, 5000)(rng));
  for (const auto& p : proxies) tb.funded(p, 100).proxy(p);
  for (const auto& v : voters) tb.funded(v, 50);
  auto vote_set = [&] {
    std::vector<AccountName> set;
    const auto k = std::uniform_int_distribution<int>(1, 3)(rng);
    for (int i = 0; i < k; ++i) set.emplace_back(pick(cands));
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
    return set;
  };
  for (std::size_t s = 0; s < steps; ++s) {
    tb.advance(std::uniform_int_distribution<Timestamp>(0, 3600)(rng));
    const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    if (u < 0.45) {
      tb.add(pick(cands), VoteProducer{std::nullopt, vote_set()});
    } else if (u < 0.65) {
      tb.delegate(pick(cands), pick(proxies));
    } else if (u < 0.85) {
      tb.add(pick(proxies), VoteProducer{std::nullopt, vote_set()});
    } else if (u < 0.95) {
      tb.add(pick(voters), VoteProducer{std::nullopt, vote_set()});
    } else {
      tb.delegate(pick(voters), pick(proxies));
    }
  }
  return tb.trace();
}

Outcome motif_equivalence() {
  Outcome o;
  std::size_t found[3] = {0, 0, 0};
  std::size_t max_events = 0;
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    const auto trace = dense_motif_trace(seed, 1700);
    const auto events = build_vote_events(trace);
    max_events = std::max(max_events, events.size());
    o.require(events.size() <= 5000, "too many events");
    const auto lin = detect_linear(events);
    const auto tri = detect_triangular(events);
    const auto eig = detect_eight(events);
    o.require(oracle::motif_keys(lin, events) == oracle::motifs_exhaustive(events, MotifShape::Linear, kDefaultMotifWindow), "linear");
    o.require(oracle::motif_keys(tri, events) == oracle::motifs_exhaustive(events, MotifShape::Triangular, kDefaultMotifWindow),
              "triangular");
    o.require(oracle::motif_keys(eig, events) == oracle::motifs_exhaustive(events, MotifShape::Eight, kDefaultMotifWindow), "eight");
    const auto strict = detect_eight(events, {.strict_distinct_proxies = true});
    o.require(oracle::motif_keys(strict, events) == oracle::motifs_exhaustive(events, MotifShape::Eight, kDefaultMotifWindow, true),
              "eight strict");
    found[0] += lin.size();
    found[1] += tri.size();
    found[2] += eig.size();
  }
  o.require(found[0] > 0 && found[1] > 0 && found[2] > 0, "a shape never occurred");

  testkit::TraceBuilder tb(1'535'760'000);
  tb.candidate("aaa").candidate("bbb").candidate("ccc").candidate("ddd");
  tb.vote("aaa", {"bbb"}).advance(kDefaultMotifWindow).vote("bbb", {"aaa"});
  tb.advance(3600).vote("ccc", {"ddd"}).advance(kDefaultMotifWindow + 1).vote("ddd", {"ccc"});
  const auto edge = build_vote_events(tb.trace());
  const auto lin = detect_linear(edge);
  o.require(lin.size() == 1 && lin[0].participants == testkit::names({"aaa", "bbb"}), "window boundary");

  char buf[128];
  std::snprintf(buf, sizeof buf, "%zu linear, %zu triangular, %zu eight, <= %zu events", found[0], found[1], found[2], max_events);
  if (o.ok) o.detail = buf;
  return o;
}

// Candidate star centres with plain-voter leaves, plus one clique of candidates.
VotingGraph stars_and_clique(std::size_t stars, std::size_t clique, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  VotingGraph g;
  const EdgeStats st{1, 86400.0, 1000.0};
  std::size_t leaf = 0;
  for (std::size_t s = 0; s < stars; ++s) {
    const AccountName centre(node("star", s));
    g.nodes[centre] = true;
    const auto k = std::uniform_int_distribution<std::size_t>(2, 30)(rng);
    for (std::size_t j = 0; j < k; ++j) {
      const AccountName l(node("leaf", leaf++));
      g.nodes[l] = false;
      g.edges[{l, centre}] = st;
    }
  }
  for (std::size_t i = 0; i < clique; ++i) g.nodes[AccountName(node("gang", i))] = true;
  for (std::size_t i = 0; i < clique; ++i) {
    for (std::size_t j = 0; j < clique; ++j) {
      if (i != j) g.edges[{AccountName(node("gang", i)), AccountName(node("gang", j))}] = st;
    }
  }
  return g;
}

std::set<AccountName> top_share(const std::map<AccountName, double>& scores, double share) {
  std::vector<std::pair<double, AccountName>> v;
  for (const auto& [n, s] : scores) v.emplace_back(-s, n);
  std::sort(v.begin(), v.end());
  const auto k = static_cast<std::size_t>(std::ceil(share * static_cast<double>(v.size())));
  std::set<AccountName> out;
  for (std::size_t i = 0; i < k && i < v.size(); ++i) out.insert(v[i].second);
  return out;
}

Outcome oddball() {
  Outcome o;
  const auto g = stars_and_clique(500, 12, 17);
  const auto features = candidate_egonet_features(g);
  const auto fit = fit_edpl(features);
  const auto ln = outlierness(features, fit, LogBase::Natural);
  const auto lg = outlierness(features, fit, LogBase::Ten);
  const auto top_ln = top_share(ln, kTopFraction);
  const auto top_lg = top_share(lg, kTopFraction);
  for (std::size_t i = 0; i < 12; ++i) o.require(top_ln.contains(AccountName(node("gang", i))), "clique member outside top decile");
  o.require(top_ln == top_lg, "log base changes the top decile");

  const EdplFit line{2.0, 1.5, 1.0};
  o.require(outlierness_score({AccountName("onl"), 4, 16}, line) == 0.0, "on-line score");
  o.require(outlierness_score({AccountName("onl"), 4, 16}, line, LogBase::Ten) == 0.0, "on-line score base 10");
  for (const auto& f : features) {
    const double e = fit.expected(f.neighbors);
    if (static_cast<double>(f.edges) == e) o.require(ln.at(f.node) == 0.0, "on-line node scored");
  }
  const auto a = analyze_gangs(g);
  if (a.network) g_networks.push_back(*a.network);
  char buf[96];
  std::snprintf(buf, sizeof buf, "alpha %.3f, top decile %zu of %zu", fit.alpha, top_ln.size(), features.size());
  if (o.ok) o.detail = buf;
  return o;
}

Outcome planted_gangs() {
  Outcome o;
  GenConfig c;
  c.seed = 21;
  c.n_accounts = 1600;
  c.n_candidates = 300;
  c.n_proxies = 5;
  c.duration_days = 90;
  c.rounds_per_day = 2;
  c.candidate_vote_prob = 0.05;
  for (std::size_t size : {8, 12}) {
    PlantSpec p;
    p.kind = PlantKind::NearClique;
    p.size = size;
    p.decoys = 4;
    c.plants.push_back(p);
  }
  const auto ledger = generate_ledger(c);
  const auto a = analyze_gangs(build_voting_network(ledger.trace));
  o.require(a.network.has_value(), "no anomalies");
  if (!o.ok) return o;
  g_networks.push_back(*a.network);
  std::vector<std::set<AccountName>> got, truth;
  for (const auto& cm : a.report.communities) got.push_back(cm.members);
  std::size_t decoys = 0, pruned = 0;
  for (const auto& pt : ledger.truth.plants) {
    truth.emplace_back(pt.members.begin(), pt.members.end());
    for (const auto& d : pt.roles.at("decoy")) {
      ++decoys;
      pruned += a.report.pruned.contains(d);
    }
  }
  const double f1 = oracle::pair_f1(got, truth);
  o.require(f1 >= kGangF1, "pairwise F1 " + std::to_string(f1));
  o.require(pruned == decoys, "pruned " + std::to_string(pruned) + " of " + std::to_string(decoys) + " decoys");
  char buf[96];
  std::snprintf(buf, sizeof buf, "F1 %.3f, %zu/%zu decoys pruned, %zu anomalies", f1, pruned, decoys, a.anomalies.size());
  if (o.ok) o.detail = buf;
  return o;
}

Outcome intensity_normalisation() {
  Outcome o;
  // Networks over every candidate of small random ledgers, on top of those built above.
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto trace = oracle::random_trace(seed, {.actions = 2000, .accounts = 40});
    const auto graph = build_voting_network(trace);
    std::vector<AccountName> cands;
    for (const auto& [n, is_c] : graph.nodes) {
      if (is_c) cands.push_back(n);
    }
    if (!cands.empty()) g_networks.push_back(reconstruct_weighted_network(graph, cands));
  }
  std::size_t sums = 0;
  for (const auto& net : g_networks) {
    std::map<AccountName, double> f_out, t_in, p_in;
    for (const auto& [e, in] : net.intensity) {
      f_out[e.first] += in.f_ratio;
      t_in[e.second] += in.t_ratio;
      p_in[e.second] += in.p_ratio;
    }
    for (const auto* m : {&f_out, &t_in, &p_in}) {
      for (const auto& [n, s] : *m) {
        // A zero sum means every in-edge had zero duration or weight, so the ratio is undefined.
        if (s == 0.0 && m != &f_out) continue;
        ++sums;
        o.require(std::fabs(s - 1.0) <= kNormTol, "sum at " + n.str() + " is " + std::to_string(s));
      }
    }
  }
  o.detail = o.ok ? std::to_string(g_networks.size()) + " networks, " + std::to_string(sums) + " sums" : o.detail;
  return o;
}

Outcome block_schedule() {
  Outcome o;
  std::vector<AccountName> producers;
  for (std::size_t i = 0; i < 21; ++i) producers.emplace_back(node("bp", i));
  const Elector elect = [&](Timestamp) { return producers; };
  const Timestamp genesis = 1'530'000'000;
  const std::vector<Timestamp> one{genesis};
  const auto round = generate_block_schedule(elect, one, {.genesis = genesis});
  o.require(round.size() == kBlocksPerRound, "blocks per round");
  std::map<AccountName, int> per;
  for (const auto& h : round) ++per[h.producer];
  o.require(per.size() == 21, "producers per round");
  for (const auto& [_, n] : per) o.require(n == 6, "blocks per producer");
  o.require(!round.empty() && round.back().timestamp + 1 - round.front().timestamp == kRoundSeconds, "round length");

  std::vector<Timestamp> starts;
  for (int r = 0; r < 1000; ++r) starts.push_back(genesis + r * kRoundSeconds);
  const auto skipped = generate_block_schedule(elect, starts, {.genesis = genesis, .skip_rate = 0.1, .seed = 11});
  std::vector<int> counts(1000, 0);
  for (const auto& h : skipped) ++counts[static_cast<std::size_t>((h.timestamp - genesis) / kRoundSeconds)];
  double mean = 0.0;
  for (int n : counts) mean += n;
  mean /= 1000.0;
  const double sigma = std::sqrt(126.0 * 0.1 * 0.9 / 1000.0);
  o.require(std::fabs(mean - kExpectedBlocks) <= kSigmas * sigma, "mean " + std::to_string(mean));
  char buf[64];
  std::snprintf(buf, sizeof buf, "mean %.3f blocks per round, 3 sigma %.3f", mean, kSigmas * sigma);
  if (o.ok) o.detail = buf;
  return o;
}

std::map<std::string, std::string> snapshot_dir(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    out[fs::relative(e.path(), dir).string()] = s.str();
  }
  return out;
}

Outcome end_to_end() {
  Outcome o;
  const fs::path root = fs::temp_directory_path() / ("dposf-acceptance-" + std::to_string(::getpid()));
  GenConfig c;
  c.seed = 77;
  c.n_accounts = 1500;
  c.n_candidates = 60;
  c.duration_days = 100;
  c.block_skip_rate = 0.05;
  for (auto kind : {PlantKind::SimilarCluster, PlantKind::LinearGang, PlantKind::TriangularGang, PlantKind::EightGang, PlantKind::NearClique}) {
    PlantSpec p;
    p.kind = kind;
    p.size = 4;
    p.shared_creator = kind == PlantKind::SimilarCluster;
    c.plants.push_back(p);
  }
  std::vector<std::map<std::string, std::string>> runs;
  std::ostringstream err;
  for (int run = 0; run < 2; ++run) {
    fs::remove_all(root);
    fs::create_directories(root);
    std::ofstream((root / "gen.conf").string()) << format_gen_config(c);
    const int g = cmd_generate({(root / "gen.conf").string(), (root / "ledger").string(), std::nullopt}, err);
    AnalyzeRequest req;
    req.analysis = Analysis::All;
    req.trace_path = (root / "ledger/trace.jsonl").string();
    req.headers_path = (root / "ledger/headers.jsonl").string();
    req.out_dir = (root / "reports").string();
    const int a = cmd_analyze(req, err);
    o.require(g == kExitOk && a == kExitOk, "command failed: " + err.str());
    runs.push_back(snapshot_dir(root));
  }
  fs::remove_all(root);
  o.require(runs[0].size() > 10, "too few outputs");
  o.require(runs[0] == runs[1], "outputs differ between runs");
  if (o.ok) o.detail = std::to_string(runs[0].size()) + " files identical";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* id;
    const char* name;
    double limit_s;  // 0 = no runtime limit
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {"AC1", "vote weight linearity, doubling and precision", 1.0, weight_formula},
      {"AC2", "replay conservation and determinism", 30.0, replay_conservation},
      {"AC3", "production entropy bounds and scale invariance", 1.0, entropy},
      {"AC4", "voter clustering equals threshold components", 10.0, clustering_equivalence},
      {"AC5", "planted similar clusters recovered", 60.0, planted_clusters},
      {"AC6", "motif detectors equal exhaustive scans", 30.0, motif_equivalence},
      {"AC7", "near-clique outlierness", 10.0, oddball},
      {"AC9", "planted near-clique gangs recovered", 60.0, planted_gangs},
      {"AC8", "intensity ratios normalised", 0.0, intensity_normalisation},
      {"AC10", "block schedule rounds", 0.0, block_schedule},
      {"AC11", "end-to-end determinism", 0.0, end_to_end},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out.ok = false;
      out.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.limit_s > 0.0 && secs >= c.limit_s) {
      out.ok = false;
      out.detail = "over time limit of " + std::to_string(static_cast<int>(c.limit_s)) + " s";
    }
    failures += !out.ok;
    std::printf("%s %-4s %s (%.2f s)%s%s\n", out.ok ? "PASS" : "FAIL", c.id, c.name, secs, out.detail.empty() ? "" : ": ",
                out.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
