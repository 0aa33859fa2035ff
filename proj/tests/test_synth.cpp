#include <doctest.h>

#include <cmath>

#include "dposf/clustering.hpp"
#include "dposf/errors.hpp"
#include "dposf/gangs.hpp"
#include "dposf/metrics.hpp"
#include "dposf/synth.hpp"
#include "oracles.hpp"

using namespace dposf;

namespace {

GenConfig small(std::uint64_t seed = 3) {
  GenConfig c;
  c.seed = seed;
  c.n_accounts = 900;
  c.n_candidates = 30;
  c.n_proxies = 6;
  c.duration_days = 100;
  c.rounds_per_day = 2;
  return c;
}

PlantSpec plant(PlantKind kind, std::size_t size) {
  PlantSpec p;
  p.kind = kind;
  p.size = size;
  return p;
}

std::set<std::vector<AccountName>> participants(const std::vector<MotifInstance>& ms) {
  std::set<std::vector<AccountName>> out;
  for (const auto& m : ms) out.insert(m.participants);
  return out;
}

std::set<std::vector<AccountName>> oracle_participants(const std::vector<VoteEvent>& events, MotifShape shape) {
  std::set<std::vector<AccountName>> out;
  for (const auto& k : oracle::motifs_exhaustive(events, shape, kDefaultMotifWindow)) out.insert(std::get<1>(k));
  return out;
}

std::set<std::vector<AccountName>> truth_participants(const PlantTruth& pt) {
  std::set<std::vector<AccountName>> out;
  for (const auto& [_, parts] : pt.motifs) out.insert(parts);
  return out;
}

}  // namespace

TEST_CASE("config text round trips and is validated") {
  GenConfig c = small();
  PlantSpec p = plant(PlantKind::SimilarCluster, 5);
  p.shared_creator = true;
  p.vote_jitter = 0.05;
  p.months = {0, 2};
  c.plants.push_back(p);
  PlantSpec q = plant(PlantKind::NearClique, 6);
  q.decoys = 3;
  c.plants.push_back(q);
  PlantSpec e = plant(PlantKind::EightGang, 4);
  e.common_proxy = true;
  c.plants.push_back(e);
  const auto text = format_gen_config(c);
  const auto back = parse_gen_config(text);
  CHECK(format_gen_config(back) == text);
  REQUIRE(back.plants.size() == 3);
  CHECK(back.plants[0].months == std::vector<int>{0, 2});
  CHECK(back.plants[1].decoys == 3);
  CHECK(back.plants[2].common_proxy);

  CHECK(parse_gen_config("# comment\nseed = 9\n\nplant = LinearGang size=3\n").plants.size() == 1);
  CHECK_THROWS_AS(parse_gen_config("seed = nine\n"), ConfigError);
  CHECK_THROWS_AS(parse_gen_config("colour = blue\n"), ConfigError);
  CHECK_THROWS_AS(parse_gen_config("plant = Blob size=3\n"), ConfigError);
  CHECK_THROWS_AS(parse_gen_config("plant = LinearGang size=1\n"), ConfigError);
  CHECK_THROWS_AS(parse_gen_config("plant = SimilarCluster size=3 jitter=0.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_gen_config("participation_rate = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_gen_config("duration_days = 0\n"), ConfigError);

  GenConfig over = small();
  over.n_accounts = 100;
  over.plants.push_back(plant(PlantKind::LinearGang, 80));
  try {
    validate(over);
    FAIL("expected ConfigError");
  } catch (const ConfigError& err) {
    CHECK(std::string(err.what()).find("LinearGang") != std::string::npos);
  }
}

TEST_CASE("generation is deterministic and replays cleanly") {
  GenConfig c = small();
  c.plants.push_back(plant(PlantKind::LinearGang, 3));
  c.plants.push_back(plant(PlantKind::TriangularGang, 4));
  c.block_skip_rate = 0.05;
  const auto a = generate_ledger(c);
  const auto b = generate_ledger(c);
  CHECK(a.trace == b.trace);
  CHECK(a.headers == b.headers);
  CHECK(truth_json(a.truth, "x", "") == truth_json(b.truth, "x", ""));

  CHECK_NOTHROW(check_trace_order(a.trace));
  const auto r = replay(a.trace);
  CHECK(r.log.rejected.empty());
  CHECK(r.state.accounts().size() == c.n_accounts);

  c.seed = 4;
  CHECK(generate_ledger(c).trace != a.trace);
}

TEST_CASE("a ledger without plants shows no mutual voting") {
  const auto g = generate_ledger(small(8));
  CHECK(g.truth.plants.empty());
  const auto events = build_vote_events(g.trace);
  CHECK(detect_linear(events).empty());
  CHECK(detect_triangular(events).empty());
  CHECK(detect_eight(events).empty());
}

TEST_CASE("a jitter-free similar cluster votes identically") {
  GenConfig c = small();
  PlantSpec p = plant(PlantKind::SimilarCluster, 5);
  p.shared_creator = true;
  c.plants.push_back(p);
  const auto g = generate_ledger(c);
  const auto series = replay_with_snapshots(g.trace, SnapshotCadence::every_month());
  const auto& members = g.truth.plants[0].members;
  const auto records = sample_voting_records(series.snapshots, {members.begin(), members.end()});
  for (const auto& x : members) {
    for (const auto& y : members) CHECK(record_similarity(records.at(x), records.at(y)) == 1.0);
    const auto& sets = records.at(x).sets;
    CHECK(sets.back().size() >= 10);
    CHECK(sets.back().size() <= 30);
  }
  const auto creation = creation_map(series.result.state);
  const auto maker = g.truth.plants[0].roles.at("creator").front();
  for (const auto& x : members) CHECK(creation.at(x) == maker);
}

TEST_CASE("planted motif gangs are realised in the trace") {
  GenConfig c = small();
  c.plants.push_back(plant(PlantKind::LinearGang, 2));
  c.plants.push_back(plant(PlantKind::TriangularGang, 20));
  c.plants.push_back(plant(PlantKind::EightGang, 4));
  PlantSpec shared = plant(PlantKind::EightGang, 3);
  shared.common_proxy = true;
  c.plants.push_back(shared);
  const auto g = generate_ledger(c);
  const auto events = build_vote_events(g.trace);

  const auto lin = participants(detect_linear(events));
  CHECK(lin == truth_participants(g.truth.plants[0]));
  CHECK(lin.size() == 1);
  CHECK(oracle_participants(events, MotifShape::Linear) == lin);

  const auto tri = participants(detect_triangular(events));
  CHECK(tri.size() == 10);
  CHECK(tri == truth_participants(g.truth.plants[1]));
  CHECK(oracle_participants(events, MotifShape::Triangular) == tri);

  auto eight_truth = truth_participants(g.truth.plants[2]);
  const auto shared_truth = truth_participants(g.truth.plants[3]);
  eight_truth.insert(shared_truth.begin(), shared_truth.end());
  const auto eig = participants(detect_eight(events));
  CHECK(eig == eight_truth);
  CHECK(oracle_participants(events, MotifShape::Eight) == eig);
  CHECK(participants(detect_eight(events, {.strict_distinct_proxies = true})) == truth_participants(g.truth.plants[2]));
}

TEST_CASE("motif series follows the plant schedule") {
  GenConfig c = small();
  c.duration_days = 150;
  PlantSpec p = plant(PlantKind::LinearGang, 4);
  p.months = {1, 3};
  c.plants.push_back(p);
  const auto g = generate_ledger(c);
  const auto series = motif_series(detect_linear(build_vote_events(g.trace)));
  const auto& months = g.truth.plants[0].active_months;
  REQUIRE(months.size() == 2);
  std::size_t total = 0;
  for (const auto& [m, counts] : series) {
    const bool active = std::find(months.begin(), months.end(), m) != months.end();
    CHECK(counts.linear == (active ? 6u : 0u));
    total += counts.linear;
  }
  CHECK(total == 12);
}

TEST_CASE("near-clique plants and their decoys") {
  GenConfig c = small();
  c.n_accounts = 1400;
  c.n_candidates = 300;
  PlantSpec p = plant(PlantKind::NearClique, 10);
  p.decoys = 3;
  c.plants.push_back(p);
  const auto g = generate_ledger(c);
  const auto& pt = g.truth.plants[0];
  CHECK(pt.members.size() == 10);
  CHECK(pt.roles.at("decoy").size() == 3);
  const auto graph = build_voting_network(g.trace);
  const auto adj = undirected_view(graph);
  for (const auto& d : pt.roles.at("decoy")) CHECK(adj.at(d).size() == 1);
  for (const auto& m : pt.members) CHECK(graph.is_candidate(m));
}

TEST_CASE("adding a plant leaves background stakes alone") {
  const auto base = generate_ledger(small(12));
  GenConfig with = small(12);
  with.plants.push_back(plant(PlantKind::LinearGang, 3));
  const auto planted = generate_ledger(with);
  auto first_stakes = [](const GeneratedLedger& g) {
    std::map<AccountName, StakeAmount> out;
    for (const auto& a : g.trace) {
      const auto* d = std::get_if<DelegateBw>(&a.payload);
      if (d && a.actor.str().starts_with("user")) out.try_emplace(a.actor, d->stake);
    }
    return out;
  };
  const auto a = first_stakes(base);
  const auto b = first_stakes(planted);
  std::size_t shared = 0;
  for (const auto& [name, s] : b) {
    if (!a.contains(name)) continue;
    CHECK(a.at(name) == s);
    ++shared;
  }
  CHECK(shared + 3 >= a.size());
}

TEST_CASE("background stakes follow the configured power law") {
  GenConfig c = small(5);
  c.n_accounts = 12'000;
  c.participation_rate = 0.0;
  c.duration_days = 31;
  c.rounds_per_day = 1;
  c.stake_powerlaw_alpha = 2.0;
  const auto g = generate_ledger(c);
  std::vector<double> stakes;
  for (const auto& a : g.trace) {
    const auto* d = std::get_if<DelegateBw>(&a.payload);
    if (d && a.actor.str().starts_with("user")) stakes.push_back(d->stake.tokens());
  }
  REQUIRE(stakes.size() >= 10'000);
  const auto fit = powerlaw_exponent(stakes);
  CHECK(std::fabs(fit.alpha - 2.0) <= 0.3);
  CHECK(std::fabs(oracle::hill_alpha(stakes, static_cast<double>(c.min_stake_tokens)) - 2.0) < 0.1);
}

TEST_CASE("proxied weight share approaches the target") {
  GenConfig c = small(2);
  c.n_accounts = 4000;
  c.stake_powerlaw_alpha = 2.0;
  c.proxy_weight_target = 0.7;
  c.n_proxies = 10;
  const auto g = generate_ledger(c);
  const auto series = replay_with_snapshots(g.trace, std::vector<Timestamp>{g.trace.back().timestamp});
  const auto shares = proxy_share_series(series.snapshots);
  CHECK(std::fabs(shares.weight.points.back().share - 0.7) <= 0.05);
}

TEST_CASE("block schedule rounds") {
  std::vector<AccountName> producers;
  for (int i = 0; i < 21; ++i) producers.emplace_back(std::string("bp") + char('a' + i));
  const Elector elect = [&](Timestamp) { return producers; };
  const Timestamp genesis = 1'530'000'000;
  const std::vector<Timestamp> one{genesis + 1000};
  const auto hs = generate_block_schedule(elect, one, {.genesis = genesis});
  REQUIRE(hs.size() == 126);
  std::map<AccountName, int> per;
  for (const auto& h : hs) ++per[h.producer];
  CHECK(per.size() == 21);
  for (const auto& [_, n] : per) CHECK(n == 6);
  CHECK(hs.front().timestamp == genesis + 1000);
  CHECK(hs.back().timestamp - hs.front().timestamp < 63);
  CHECK(hs.back().timestamp + 1 - hs.front().timestamp == 63);
  for (std::size_t i = 1; i < hs.size(); ++i) CHECK(hs[i].height == hs[i - 1].height + 1);

  std::vector<AccountName> few(producers.begin(), producers.begin() + 20);
  const Elector short_elect = [&](Timestamp) { return few; };
  CHECK_THROWS_AS(generate_block_schedule(short_elect, one, {.genesis = genesis}), DataError);

  // Skipped heights are not reused.
  const auto skipped = generate_block_schedule(elect, one, {.genesis = genesis, .skip_rate = 0.5, .seed = 2});
  CHECK(skipped.size() < 126);
  for (const auto& h : skipped) {
    const auto pos = std::find_if(hs.begin(), hs.end(), [&](const BlockHeader& x) { return x.height == h.height; });
    REQUIRE(pos != hs.end());
    CHECK(pos->producer == h.producer);
    CHECK(pos->timestamp == h.timestamp);
  }
}

TEST_CASE("equal stakes give a uniform month") {
  GenConfig c = small(6);
  c.n_candidates = 21;
  c.equal_candidate_stakes = true;
  c.participation_rate = 0.0;
  c.n_proxies = 0;
  c.proxy_weight_target = 0.0;
  c.duration_days = 61;
  const auto g = generate_ledger(c);
  const auto months = monthly_production(g.headers);
  REQUIRE(months.size() >= 2);
  CHECK(std::fabs(production_entropy(months[1]) - std::log2(21.0)) < 1e-9);
}

TEST_CASE("substreams and names") {
  auto a = substream(1, "stakes");
  auto b = substream(1, "stakes");
  auto c = substream(1, "timing");
  auto d = substream(1, "stakes", 1);
  const auto x = a();
  CHECK(x == b());
  CHECK(x != c());
  CHECK(x != d());
  CHECK(name_code(0, 3) == "aaa");
  CHECK(name_code(1, 3) == "aab");
  CHECK(AccountName::is_valid("user" + name_code(30 * 31 * 31 + 1, 4)));
  CHECK(to_string(PlantKind::NearClique) == "NearClique");
  CHECK(parse_plant_kind("EightGang") == PlantKind::EightGang);
  CHECK_FALSE(parse_plant_kind("eight").has_value());
}

TEST_CASE("truth file round trip") {
  GenConfig c = small();
  c.plants.push_back(plant(PlantKind::TriangularGang, 4));
  const auto g = generate_ledger(c);
  const auto text = truth_json(g.truth, "0123456789abcdef", format_gen_config(c));
  const auto back = parse_truth_json(text);
  CHECK(back.trace_digest == "0123456789abcdef");
  REQUIRE(back.truth.plants.size() == 1);
  CHECK(back.truth.plants[0].members == g.truth.plants[0].members);
  CHECK(back.truth.plants[0].motifs == g.truth.plants[0].motifs);
  CHECK(back.truth.plants[0].roles == g.truth.plants[0].roles);
  CHECK_FALSE(back.truth.plants[0].action_seqs.empty());
  CHECK_THROWS_AS(parse_truth_json("nope"), ParseError);
}
