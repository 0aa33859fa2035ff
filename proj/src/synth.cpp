#include "dposf/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "dposf/calendar.hpp"
#include "dposf/errors.hpp"
#include "dposf/replay.hpp"

namespace dposf {

namespace {

using nlohmann::json;

constexpr std::string_view kNameAlphabet = "abcdefghijklmnopqrstuvwxyz12345";
constexpr std::size_t kRegistrars = 5;
constexpr Timestamp kHour = 3600;

constexpr std::array<std::string_view, 5> kPlantNames = {"SimilarCluster", "LinearGang", "TriangularGang",
                                                         "EightGang", "NearClique"};

// ---------------------------------------------------------------------------------------------
// Random helpers

std::int64_t uniform_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

double uniform01(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

bool chance(std::mt19937_64& rng, double p) { return p > 0.0 && uniform01(rng) < p; }

Timestamp uniform_time(std::mt19937_64& rng, Timestamp lo, Timestamp hi_exclusive) {
  return hi_exclusive <= lo ? lo : uniform_int(rng, lo, hi_exclusive - 1);
}

std::vector<AccountName> sorted_sample(std::span<const AccountName> pool, std::size_t k, std::mt19937_64& rng) {
  std::vector<AccountName> v(pool.begin(), pool.end());
  k = std::min(k, v.size());
  for (std::size_t i = 0; i < k; ++i) {
    const auto j = static_cast<std::size_t>(uniform_int(rng, static_cast<std::int64_t>(i), static_cast<std::int64_t>(v.size() - 1)));
    std::swap(v[i], v[j]);
  }
  v.erase(v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  std::sort(v.begin(), v.end());
  return v;
}

// k distinct candidates drawn with popularity weights, returned sorted.
std::vector<AccountName> popular_sample(std::span<const AccountName> pool, std::span<const double> weights, std::size_t k,
                                        std::mt19937_64& rng) {
  std::vector<double> w(weights.begin(), weights.end());
  std::vector<AccountName> out;
  k = std::min(k, pool.size());
  for (std::size_t i = 0; i < k; ++i) {
    std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
    const std::size_t j = pick(rng);
    out.push_back(pool[j]);
    w[j] = 0.0;
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------------------------
// Trace assembly

struct Planned {
  Timestamp t;
  std::uint64_t ordinal;
  AccountName actor;
  Payload payload;
  std::optional<std::size_t> plant;
};

class Planner {
 public:
  explicit Planner(Timestamp genesis) : genesis_(genesis) {}

  void add(Timestamp t, const AccountName& actor, Payload payload, std::optional<std::size_t> plant = std::nullopt) {
    items_.push_back({t, next_++, actor, std::move(payload), plant});
  }

  // Setup actions are packed 64 per second from genesis, in submission order.
  void setup(const AccountName& actor, Payload payload, std::optional<std::size_t> plant = std::nullopt) {
    add(genesis_ + static_cast<Timestamp>(setup_count_++ / 64), actor, std::move(payload), plant);
  }

  Timestamp setup_end() const { return genesis_ + static_cast<Timestamp>(setup_count_ / 64) + 1; }

  std::vector<Action> finish(GroundTruth& truth) {
    std::sort(items_.begin(), items_.end(),
              [](const Planned& a, const Planned& b) { return std::tie(a.t, a.ordinal) < std::tie(b.t, b.ordinal); });
    std::vector<Action> trace;
    trace.reserve(items_.size());
    for (std::size_t i = 0; i < items_.size(); ++i) {
      auto& p = items_[i];
      const auto block = static_cast<std::uint64_t>((p.t - genesis_) * 2 + 1);
      trace.push_back({p.actor, std::move(p.payload), p.t, block, static_cast<std::uint64_t>(i)});
      if (p.plant) truth.plants[*p.plant].action_seqs.push_back(i);
    }
    return trace;
  }

 private:
  Timestamp genesis_;
  std::uint64_t next_ = 0;
  std::size_t setup_count_ = 0;
  std::vector<Planned> items_;
};

VoteProducer direct_vote(std::vector<AccountName> producers) { return VoteProducer{std::nullopt, std::move(producers)}; }
VoteProducer proxy_vote(const AccountName& proxy) { return VoteProducer{proxy, {}}; }

std::vector<AccountName> all_but(const std::vector<AccountName>& members, const AccountName& skip) {
  std::vector<AccountName> out;
  for (const auto& m : members) {
    if (m != skip) out.push_back(m);
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct MonthWindow {
  YearMonth month;
  Timestamp lo;
  Timestamp hi;  // exclusive
};

std::size_t plant_accounts(const PlantSpec& p) {
  std::size_t n = p.size + (p.shared_creator ? 1 : 0);
  switch (p.kind) {
    case PlantKind::TriangularGang:
      n += p.size / 2;
      break;
    case PlantKind::EightGang:
      n += p.common_proxy ? 1 : p.size;
      break;
    case PlantKind::NearClique:
      n += p.decoys;
      break;
    default:
      break;
  }
  return n;
}

std::string plant_label(std::size_t i, const PlantSpec& p) {
  return "plant " + std::to_string(i) + " (" + std::string(to_string(p.kind)) + ")";
}

bool parse_bool(std::string_view v, const std::string& field) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(field + ": expected boolean, got '" + std::string(v) + "'");
}

template <typename T>
T parse_number(std::string_view v, const std::string& field) {
  T out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw ConfigError(field + ": invalid number '" + std::string(v) + "'");
  }
  return out;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

PlantSpec parse_plant(std::string_view text, std::size_t index) {
  const std::string where = "plant " + std::to_string(index);
  std::istringstream in{std::string(text)};
  std::string token;
  if (!(in >> token)) throw ConfigError(where + ": missing kind");
  const auto kind = parse_plant_kind(token);
  if (!kind) throw ConfigError(where + ": unknown kind '" + token + "'");
  PlantSpec spec;
  spec.kind = *kind;
  while (in >> token) {
    const auto eq = token.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key=value, got '" + token + "'");
    const std::string key = token.substr(0, eq);
    const std::string_view value = std::string_view(token).substr(eq + 1);
    const std::string field = where + "." + key;
    if (key == "size") {
      spec.size = parse_number<std::size_t>(value, field);
    } else if (key == "shared_creator") {
      spec.shared_creator = parse_bool(value, field);
    } else if (key == "jitter") {
      spec.vote_jitter = parse_number<double>(value, field);
    } else if (key == "decoys") {
      spec.decoys = parse_number<std::size_t>(value, field);
    } else if (key == "common_proxy") {
      spec.common_proxy = parse_bool(value, field);
    } else if (key == "months") {
      std::string_view rest = value;
      while (!rest.empty()) {
        const auto comma = rest.find(',');
        spec.months.push_back(parse_number<int>(rest.substr(0, comma), field));
        rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
      }
    } else {
      throw ConfigError(field + ": unknown plant key");
    }
  }
  return spec;
}

}  // namespace

std::string_view to_string(PlantKind kind) noexcept { return kPlantNames[static_cast<std::size_t>(kind)]; }

std::optional<PlantKind> parse_plant_kind(std::string_view text) noexcept {
  for (std::size_t i = 0; i < kPlantNames.size(); ++i) {
    if (kPlantNames[i] == text) return static_cast<PlantKind>(i);
  }
  return std::nullopt;
}

std::mt19937_64 substream(std::uint64_t seed, std::string_view name, std::uint64_t index) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : name) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

std::string name_code(std::size_t value, std::size_t width) {
  std::string out(width, kNameAlphabet[0]);
  for (std::size_t i = width; i-- > 0;) {
    out[i] = kNameAlphabet[value % kNameAlphabet.size()];
    value /= kNameAlphabet.size();
  }
  if (value != 0) throw ConfigError("name code overflow");
  return out;
}

void validate(const GenConfig& c) {
  auto fraction = [](double v, const char* field) {
    if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string(field) + ": must be in [0, 1]");
  };
  if (c.n_accounts == 0) throw ConfigError("n_accounts: must be positive");
  if (c.n_candidates == 0) throw ConfigError("n_candidates: must be positive");
  if (c.duration_days < 1) throw ConfigError("duration_days: must be at least 1");
  if (!(c.stake_powerlaw_alpha > 1.0)) throw ConfigError("stake_powerlaw_alpha: must exceed 1");
  if (c.min_stake_tokens < 1) throw ConfigError("min_stake_tokens: must be positive");
  if (c.start_time < kVoteEpoch) throw ConfigError("start_time: must not precede 2000-01-01");
  fraction(c.proxy_weight_target, "proxy_weight_target");
  fraction(c.participation_rate, "participation_rate");
  fraction(c.revote_prob, "revote_prob");
  fraction(c.candidate_vote_prob, "candidate_vote_prob");
  if (!(c.block_skip_rate >= 0.0 && c.block_skip_rate < 1.0)) throw ConfigError("block_skip_rate: must be in [0, 1)");
  if (c.rounds_per_day < 1 || c.rounds_per_day > static_cast<std::size_t>(kSecondsPerDay / kRoundSeconds)) {
    throw ConfigError("rounds_per_day: must be in [1, 1371]");
  }
  if (c.proxy_weight_target > 0.0 && c.n_proxies == 0) throw ConfigError("n_proxies: proxy_weight_target needs proxies");

  std::size_t used = kRegistrars + c.n_candidates + c.n_proxies;
  if (used > c.n_accounts) throw ConfigError("n_accounts: too small for registrars, candidates and proxies");
  for (std::size_t i = 0; i < c.plants.size(); ++i) {
    const auto& p = c.plants[i];
    const std::string label = plant_label(i, p);
    if (p.size < 2) throw ConfigError(label + ": size must be at least 2");
    if (!(p.vote_jitter >= 0.0 && p.vote_jitter <= 0.1)) throw ConfigError(label + ": jitter must be in [0, 0.1]");
    if (p.size > 31 && p.kind != PlantKind::SimilarCluster && p.kind != PlantKind::TriangularGang) {
      throw ConfigError(label + ": size exceeds the 30-vote limit");
    }
    if (p.kind == PlantKind::EightGang && p.common_proxy && p.size > 30) {
      throw ConfigError(label + ": size exceeds the 30-vote limit");
    }
    if (p.kind == PlantKind::TriangularGang && p.size % 2 != 0) throw ConfigError(label + ": size must be even");
    if (p.kind == PlantKind::SimilarCluster && c.n_candidates < 10) {
      throw ConfigError(label + ": needs at least 10 background candidates");
    }
    for (int m : p.months) {
      if (m < 0) throw ConfigError(label + ": negative month offset");
    }
    used += plant_accounts(p);
    if (used > c.n_accounts) throw ConfigError(label + ": plants exceed the account budget (n_accounts)");
  }
}

GenConfig parse_gen_config(std::string_view text) {
  GenConfig c;
  std::size_t lineno = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key == "seed") c.seed = parse_number<std::uint64_t>(value, key);
    else if (key == "n_accounts") c.n_accounts = parse_number<std::size_t>(value, key);
    else if (key == "n_candidates") c.n_candidates = parse_number<std::size_t>(value, key);
    else if (key == "n_proxies") c.n_proxies = parse_number<std::size_t>(value, key);
    else if (key == "stake_powerlaw_alpha") c.stake_powerlaw_alpha = parse_number<double>(value, key);
    else if (key == "min_stake_tokens") c.min_stake_tokens = parse_number<std::int64_t>(value, key);
    else if (key == "duration_days") c.duration_days = parse_number<int>(value, key);
    else if (key == "start_time") c.start_time = parse_number<Timestamp>(value, key);
    else if (key == "proxy_weight_target") c.proxy_weight_target = parse_number<double>(value, key);
    else if (key == "block_skip_rate") c.block_skip_rate = parse_number<double>(value, key);
    else if (key == "participation_rate") c.participation_rate = parse_number<double>(value, key);
    else if (key == "revote_prob") c.revote_prob = parse_number<double>(value, key);
    else if (key == "candidate_vote_prob") c.candidate_vote_prob = parse_number<double>(value, key);
    else if (key == "rounds_per_day") c.rounds_per_day = parse_number<std::size_t>(value, key);
    else if (key == "equal_candidate_stakes") c.equal_candidate_stakes = parse_bool(value, key);
    else if (key == "plant") c.plants.push_back(parse_plant(value, c.plants.size()));
    else throw ConfigError(key + ": unknown config key");
  }
  validate(c);
  return c;
}

std::string format_gen_config(const GenConfig& c) {
  std::ostringstream out;
  out.precision(17);
  out << "seed = " << c.seed << '\n'
      << "n_accounts = " << c.n_accounts << '\n'
      << "n_candidates = " << c.n_candidates << '\n'
      << "n_proxies = " << c.n_proxies << '\n'
      << "stake_powerlaw_alpha = " << c.stake_powerlaw_alpha << '\n'
      << "min_stake_tokens = " << c.min_stake_tokens << '\n'
      << "duration_days = " << c.duration_days << '\n'
      << "start_time = " << c.start_time << '\n'
      << "proxy_weight_target = " << c.proxy_weight_target << '\n'
      << "block_skip_rate = " << c.block_skip_rate << '\n'
      << "participation_rate = " << c.participation_rate << '\n'
      << "revote_prob = " << c.revote_prob << '\n'
      << "candidate_vote_prob = " << c.candidate_vote_prob << '\n'
      << "rounds_per_day = " << c.rounds_per_day << '\n'
      << "equal_candidate_stakes = " << (c.equal_candidate_stakes ? "true" : "false") << '\n';
  for (const auto& p : c.plants) {
    out << "plant = " << to_string(p.kind) << " size=" << p.size << " shared_creator=" << (p.shared_creator ? "true" : "false")
        << " jitter=" << p.vote_jitter << " decoys=" << p.decoys << " common_proxy=" << (p.common_proxy ? "true" : "false");
    if (!p.months.empty()) {
      out << " months=";
      for (std::size_t i = 0; i < p.months.size(); ++i) out << (i ? "," : "") << p.months[i];
    }
    out << '\n';
  }
  return out.str();
}

std::vector<BlockHeader> generate_block_schedule(const Elector& elect, std::span<const Timestamp> round_starts,
                                                 ScheduleOptions opts) {
  if (!(opts.skip_rate >= 0.0 && opts.skip_rate < 1.0)) throw DomainError("skip rate must be in [0, 1)");
  auto rng = substream(opts.seed, "schedule");
  std::bernoulli_distribution skip(opts.skip_rate);
  std::vector<BlockHeader> headers;
  Timestamp previous_end = std::numeric_limits<Timestamp>::min();
  for (const Timestamp start : round_starts) {
    if (start < opts.genesis) throw DomainError("round starts before genesis");
    if (start < previous_end) throw DomainError("rounds overlap");
    previous_end = start + kRoundSeconds;
    const auto producers = elect(start);
    if (producers.size() < kProducersPerRound) throw DataError("fewer than 21 registered candidates");
    const auto first_height = static_cast<std::uint64_t>((start - opts.genesis) * 2 + 1);
    for (std::size_t slot = 0; slot < kBlocksPerRound; ++slot) {
      if (opts.skip_rate > 0.0 && skip(rng)) continue;
      headers.push_back({first_height + slot, producers[slot / kBlocksPerSlot], start + static_cast<Timestamp>(slot / 2)});
    }
  }
  return headers;
}

GeneratedLedger generate_ledger(const GenConfig& config) {
  validate(config);
  const Timestamp genesis = config.start_time;
  const Timestamp end = genesis + static_cast<Timestamp>(config.duration_days) * kSecondsPerDay;

  GeneratedLedger out;
  GroundTruth& truth = out.truth;
  Planner plan(genesis);

  auto rng_accounts = substream(config.seed, "accounts");
  auto rng_stakes = substream(config.seed, "stakes");
  auto rng_timing = substream(config.seed, "timing");
  auto rng_votes = substream(config.seed, "votes");
  auto rng_proxies = substream(config.seed, "proxies");

  const AccountName& system = VotingState::kSystemAccount;
  std::vector<AccountName> registrars;
  for (std::size_t i = 0; i < kRegistrars; ++i) {
    registrars.emplace_back("registrar" + name_code(i, 1));
    plan.setup(system, NewAccount{registrars.back()});
  }
  auto random_registrar = [&]() -> const AccountName& {
    return registrars[static_cast<std::size_t>(uniform_int(rng_accounts, 0, kRegistrars - 1))];
  };
  auto create = [&](const AccountName& name, const AccountName& creator, StakeAmount stake,
                    std::optional<std::size_t> plant = std::nullopt) {
    plan.setup(creator, NewAccount{name}, plant);
    if (stake.units() > 0) plan.setup(name, DelegateBw{stake}, plant);
  };

  // Background candidates and proxies.
  std::vector<AccountName> candidates;
  for (std::size_t i = 0; i < config.n_candidates; ++i) {
    candidates.emplace_back("bp" + name_code(i, 3));
    const auto tokens = config.equal_candidate_stakes ? 1000 : uniform_int(rng_stakes, 500, 5000);
    create(candidates.back(), random_registrar(), StakeAmount::from_tokens(tokens));
    plan.setup(candidates.back(), RegProducer{});
  }
  std::sort(candidates.begin(), candidates.end());
  // Weight that will be cast directly regardless of routing; counted when steering the proxied share.
  double fixed_direct_weight = 0.0;
  std::vector<AccountName> proxies;
  for (std::size_t i = 0; i < config.n_proxies; ++i) {
    proxies.emplace_back("proxy" + name_code(i, 3));
    create(proxies.back(), random_registrar(), StakeAmount::from_tokens(100));
    plan.setup(proxies.back(), RegProxy{true});
    fixed_direct_weight += vote_weight_at(StakeAmount::from_tokens(100), end);
  }

  // Plant accounts.
  struct PlantAccounts {
    std::vector<AccountName> members;
    std::vector<AccountName> proxies;
    std::vector<AccountName> decoys;
  };
  std::vector<PlantAccounts> plant_accounts_list;
  for (std::size_t p = 0; p < config.plants.size(); ++p) {
    const auto& spec = config.plants[p];
    auto rng_plant = substream(config.seed, "plant", p);
    PlantTruth pt;
    pt.id = p;
    pt.kind = spec.kind;
    truth.plants.push_back(std::move(pt));
    PlantAccounts acc;

    std::optional<AccountName> maker;
    if (spec.shared_creator) {
      maker = AccountName("maker" + name_code(p, 2));
      create(*maker, system, StakeAmount::from_tokens(10), p);
      truth.plants[p].roles["creator"] = {*maker};
    }
    const bool candidates_plant = spec.kind != PlantKind::SimilarCluster;
    for (std::size_t j = 0; j < spec.size; ++j) {
      AccountName m("plant" + name_code(p, 2) + name_code(j, 2));
      const StakeAmount stake = candidates_plant ? StakeAmount::from_tokens(1000)
                                                 : StakeAmount::from_tokens(uniform_int(rng_plant, 1'000'000, 5'000'000));
      create(m, maker ? *maker : registrars[static_cast<std::size_t>(uniform_int(rng_plant, 0, kRegistrars - 1))], stake, p);
      if (candidates_plant) plan.setup(m, RegProducer{}, p);
      if (spec.kind == PlantKind::SimilarCluster || spec.kind == PlantKind::LinearGang || spec.kind == PlantKind::NearClique) {
        fixed_direct_weight += vote_weight_at(stake, end);
      }
      acc.members.push_back(std::move(m));
    }
    std::size_t n_proxies = 0;
    if (spec.kind == PlantKind::TriangularGang) n_proxies = spec.size / 2;
    if (spec.kind == PlantKind::EightGang) n_proxies = spec.common_proxy ? 1 : spec.size;
    for (std::size_t j = 0; j < n_proxies; ++j) {
      AccountName q("pxy" + name_code(p, 2) + name_code(j, 2));
      create(q, maker ? *maker : registrars[0], StakeAmount::from_tokens(100), p);
      plan.setup(q, RegProxy{true}, p);
      acc.proxies.push_back(std::move(q));
    }
    if (spec.kind == PlantKind::NearClique) {
      for (std::size_t j = 0; j < spec.decoys; ++j) {
        AccountName d("decoy" + name_code(p, 2) + name_code(j, 2));
        create(d, registrars[static_cast<std::size_t>(uniform_int(rng_plant, 0, kRegistrars - 1))],
               StakeAmount::from_tokens(1000), p);
        plan.setup(d, RegProducer{}, p);
        acc.decoys.push_back(std::move(d));
      }
    }
    truth.plants[p].members = acc.members;
    if (!acc.proxies.empty()) truth.plants[p].roles["proxy"] = acc.proxies;
    if (!acc.decoys.empty()) truth.plants[p].roles["decoy"] = acc.decoys;
    plant_accounts_list.push_back(std::move(acc));
  }

  // Background stakeholders.
  std::size_t used = kRegistrars + config.n_candidates + config.n_proxies;
  for (const auto& p : config.plants) used += plant_accounts(p);
  const std::size_t n_background = config.n_accounts - used;
  std::vector<AccountName> background;
  std::vector<StakeAmount> initial_stake;
  const double tail = 1.0 / (config.stake_powerlaw_alpha - 1.0);
  for (std::size_t i = 0; i < n_background; ++i) {
    background.emplace_back("user" + name_code(i, 4));
    const double u = 1.0 - uniform01(rng_stakes);  // (0, 1]
    const double tokens = std::min(1e12, static_cast<double>(config.min_stake_tokens) * std::pow(u, -tail));
    initial_stake.emplace_back(static_cast<std::int64_t>(std::llround(tokens * kUnitsPerToken)));
    create(background.back(), random_registrar(), initial_stake.back());
  }

  const Timestamp active_start = std::max(genesis + kHour, plan.setup_end() + 60);
  if (active_start >= end) throw ConfigError("duration_days: too short for account setup");

  std::vector<MonthWindow> months;
  for (YearMonth m = month_of(active_start); month_start(m) < end; m = m.next()) {
    months.push_back({m, std::max(active_start, month_start(m)), std::min(end, month_start(m.next()))});
  }
  auto month_index = [&](Timestamp t) {
    const YearMonth m = month_of(t);
    for (std::size_t i = 0; i < months.size(); ++i) {
      if (months[i].month == m) return i;
    }
    return months.size() - 1;
  };

  // Popularity weights over background candidates.
  std::vector<double> popularity(candidates.size());
  for (std::size_t r = 0; r < candidates.size(); ++r) popularity[r] = 1.0 / std::pow(static_cast<double>(r + 1), 0.7);
  auto random_set = [&](std::mt19937_64& rng) {
    const auto lo = std::min<std::int64_t>(5, static_cast<std::int64_t>(candidates.size()));
    const auto hi = std::min<std::int64_t>(30, static_cast<std::int64_t>(candidates.size()));
    return popular_sample(candidates, popularity, static_cast<std::size_t>(uniform_int(rng, lo, hi)), rng);
  };

  // Background proxies vote early and then once in every month.
  std::vector<Timestamp> proxy_last_vote(proxies.size(), 0);
  for (std::size_t i = 0; i < proxies.size(); ++i) {
    const Timestamp first = uniform_time(rng_timing, active_start, std::min(end, active_start + 2 * kSecondsPerDay));
    plan.add(first, proxies[i], direct_vote(random_set(rng_votes)));
    proxy_last_vote[i] = first;
    for (const auto& w : months) {
      const Timestamp t = uniform_time(rng_timing, std::max(w.lo, first + 1), w.hi);
      if (t <= first || t >= end) continue;
      plan.add(t, proxies[i], direct_vote(random_set(rng_votes)));
      proxy_last_vote[i] = t;
    }
  }

  // Background voters.
  std::vector<std::size_t> order(background.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng_votes);
  const auto n_voters = static_cast<std::size_t>(std::llround(config.participation_rate * static_cast<double>(background.size())));
  order.resize(std::min(n_voters, order.size()));
  std::sort(order.begin(), order.end());

  struct VoterPlan {
    std::size_t account;
    Timestamp first;
    std::vector<Timestamp> revotes;
    StakeAmount final_stake;
    std::size_t proxy = 0;
    bool proxied = false;
  };
  std::vector<VoterPlan> voters;
  for (const std::size_t idx : order) {
    VoterPlan v{idx, uniform_time(rng_timing, active_start, end), {}, initial_stake[idx]};
    for (std::size_t mi = month_index(v.first) + 1; mi < months.size(); ++mi) {
      if (chance(rng_timing, config.revote_prob)) v.revotes.push_back(uniform_time(rng_timing, months[mi].lo, months[mi].hi));
    }
    // Occasional stake changes after creation.
    if (chance(rng_stakes, 0.2)) {
      const auto extra = StakeAmount(static_cast<std::int64_t>(uniform01(rng_stakes) * static_cast<double>(v.final_stake.units())));
      plan.add(uniform_time(rng_timing, active_start, end), background[idx], DelegateBw{extra});
      v.final_stake += extra;
    }
    if (chance(rng_stakes, 0.1)) {
      const auto less = StakeAmount(static_cast<std::int64_t>(0.5 * uniform01(rng_stakes) * static_cast<double>(initial_stake[idx].units())));
      plan.add(uniform_time(rng_timing, active_start, end), background[idx], UndelegateBw{less});
      v.final_stake -= less;
    }
    if (!proxies.empty()) v.proxy = static_cast<std::size_t>(uniform_int(rng_proxies, 0, static_cast<std::int64_t>(proxies.size()) - 1));
    voters.push_back(std::move(v));
  }

  // Route voters through proxies, largest stake first, until the estimated final weight share via
  // proxies reaches the target.
  if (config.proxy_weight_target > 0.0 && !proxies.empty()) {
    std::vector<double> direct_w(voters.size()), proxied_w(voters.size());
    double total = fixed_direct_weight;
    for (std::size_t i = 0; i < voters.size(); ++i) {
      const auto& v = voters[i];
      const Timestamp last = v.revotes.empty() ? v.first : v.revotes.back();
      direct_w[i] = vote_weight_at(v.final_stake, last);
      proxied_w[i] = vote_weight_at(v.final_stake, proxy_last_vote[v.proxy]);
      total += direct_w[i];
    }
    std::vector<std::size_t> by_stake(voters.size());
    std::iota(by_stake.begin(), by_stake.end(), 0);
    std::stable_sort(by_stake.begin(), by_stake.end(),
                     [&](std::size_t a, std::size_t b) { return voters[a].final_stake > voters[b].final_stake; });
    double routed = 0.0;
    for (const std::size_t i : by_stake) {
      const double total_after = total - direct_w[i] + proxied_w[i];
      if (routed + proxied_w[i] <= config.proxy_weight_target * total_after) {
        voters[i].proxied = true;
        routed += proxied_w[i];
        total = total_after;
      }
    }
  }

  for (const auto& v : voters) {
    const AccountName& name = background[v.account];
    if (v.proxied) {
      plan.add(v.first, name, proxy_vote(proxies[v.proxy]));
      continue;
    }
    plan.add(v.first, name, direct_vote(random_set(rng_votes)));
    for (const Timestamp t : v.revotes) plan.add(t, name, direct_vote(random_set(rng_votes)));
  }

  // Background candidates occasionally vote for a few peers.
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!chance(rng_votes, config.candidate_vote_prob)) continue;
    auto peers = all_but(candidates, candidates[i]);
    const auto k = static_cast<std::size_t>(uniform_int(rng_votes, 1, 5));
    plan.add(uniform_time(rng_timing, active_start, end), candidates[i], direct_vote(sorted_sample(peers, k, rng_votes)));
  }

  // Plant behaviour.
  for (std::size_t p = 0; p < config.plants.size(); ++p) {
    const auto& spec = config.plants[p];
    const auto& acc = plant_accounts_list[p];
    auto& pt = truth.plants[p];
    auto rng = substream(config.seed, "plant-activity", p);

    std::vector<const MonthWindow*> active;
    if (spec.months.empty()) {
      for (const auto& w : months) active.push_back(&w);
    } else {
      for (int m : spec.months) {
        if (static_cast<std::size_t>(m) >= months.size()) {
          throw ConfigError(plant_label(p, spec) + ": month offset " + std::to_string(m) + " is beyond the duration");
        }
        active.push_back(&months[static_cast<std::size_t>(m)]);
      }
    }
    // Each active month's burst fits in two hours starting at `anchor`.
    auto anchor_in = [&](const MonthWindow& w) { return uniform_time(rng, w.lo, std::max(w.lo + 1, w.hi - 2 * kHour)); };
    const auto& m = acc.members;

    switch (spec.kind) {
      case PlantKind::SimilarCluster: {
        std::vector<AccountName> base;
        for (const auto* w : active) {
          if (base.empty()) {
            const auto hi = std::min<std::int64_t>(30, static_cast<std::int64_t>(candidates.size()));
            base = sorted_sample(candidates, static_cast<std::size_t>(uniform_int(rng, 10, hi)), rng);
          } else {
            // Drift the shared set by one candidate between months.
            std::vector<AccountName> outside;
            std::set_difference(candidates.begin(), candidates.end(), base.begin(), base.end(), std::back_inserter(outside));
            if (!outside.empty()) {
              base[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(base.size()) - 1))] =
                  outside[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(outside.size()) - 1))];
              std::sort(base.begin(), base.end());
            }
          }
          const Timestamp anchor = anchor_in(*w);
          for (const auto& member : m) {
            auto set = base;
            if (chance(rng, spec.vote_jitter)) {
              std::vector<AccountName> outside;
              std::set_difference(candidates.begin(), candidates.end(), set.begin(), set.end(), std::back_inserter(outside));
              if (!outside.empty()) {
                set[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(set.size()) - 1))] =
                    outside[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(outside.size()) - 1))];
                std::sort(set.begin(), set.end());
              }
            }
            plan.add(anchor + uniform_int(rng, 0, kHour - 1), member, direct_vote(std::move(set)), p);
          }
        }
        break;
      }
      case PlantKind::LinearGang:
      case PlantKind::NearClique: {
        for (const auto* w : active) {
          const Timestamp anchor = anchor_in(*w);
          for (const auto& member : m) plan.add(anchor + uniform_int(rng, 0, kHour - 1), member, direct_vote(all_but(m, member)), p);
        }
        for (std::size_t i = 0; i < m.size(); ++i) {
          for (std::size_t j = i + 1; j < m.size(); ++j) pt.motifs.push_back({MotifShape::Linear, {m[i], m[j]}});
        }
        if (!acc.decoys.empty()) {
          const auto* w = active.front();
          for (const auto& d : acc.decoys) {
            const auto& target = m[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(m.size()) - 1))];
            plan.add(uniform_time(rng, w->lo, w->hi), d, direct_vote({target}), p);
          }
        }
        break;
      }
      case PlantKind::TriangularGang: {
        for (const auto* w : active) {
          const Timestamp anchor = anchor_in(*w);
          for (std::size_t i = 0; i + 1 < m.size(); i += 2) {
            const auto& a = m[i];
            const auto& b = m[i + 1];
            const auto& q = acc.proxies[i / 2];
            plan.add(anchor + uniform_int(rng, 0, kHour / 2 - 1), q, direct_vote({b}), p);
            plan.add(anchor + kHour / 2 + uniform_int(rng, 0, kHour / 2 - 1), a, proxy_vote(q), p);
            plan.add(anchor + uniform_int(rng, 0, kHour - 1), b, direct_vote({a}), p);
          }
        }
        for (std::size_t i = 0; i + 1 < m.size(); i += 2) pt.motifs.push_back({MotifShape::Triangular, {m[i], acc.proxies[i / 2], m[i + 1]}});
        break;
      }
      case PlantKind::EightGang: {
        auto proxy_of = [&](std::size_t i) -> const AccountName& { return acc.proxies[spec.common_proxy ? 0 : i]; };
        for (const auto* w : active) {
          const Timestamp anchor = anchor_in(*w);
          if (spec.common_proxy) {
            auto all = m;
            std::sort(all.begin(), all.end());
            plan.add(anchor + uniform_int(rng, 0, kHour / 2 - 1), acc.proxies[0], direct_vote(std::move(all)), p);
          } else {
            for (std::size_t i = 0; i < m.size(); ++i) {
              plan.add(anchor + uniform_int(rng, 0, kHour / 2 - 1), acc.proxies[i], direct_vote(all_but(m, m[i])), p);
            }
          }
          for (std::size_t i = 0; i < m.size(); ++i) {
            plan.add(anchor + kHour / 2 + uniform_int(rng, 0, kHour / 2 - 1), m[i], proxy_vote(proxy_of(i)), p);
          }
        }
        for (std::size_t i = 0; i < m.size(); ++i) {
          for (std::size_t j = i + 1; j < m.size(); ++j) pt.motifs.push_back({MotifShape::Eight, {m[i], proxy_of(i), m[j], proxy_of(j)}});
        }
        break;
      }
    }
    for (const auto* w : active) pt.active_months.push_back(w->month);
  }

  out.trace = plan.finish(truth);

  // Production schedule: rounds sampled across each day, producers re-elected from the replayed state.
  std::vector<Timestamp> round_starts;
  const Timestamp spacing = kSecondsPerDay / static_cast<Timestamp>(config.rounds_per_day);
  for (Timestamp day = genesis; day < end; day += kSecondsPerDay) {
    for (std::size_t r = 0; r < config.rounds_per_day; ++r) {
      const Timestamp t = day + static_cast<Timestamp>(r) * spacing;
      if (t >= active_start && t + kRoundSeconds <= end) round_starts.push_back(t);
    }
  }
  VotingState state;
  std::size_t cursor = 0;
  const Elector elect = [&](Timestamp t) {
    for (; cursor < out.trace.size() && out.trace[cursor].timestamp < t; ++cursor) state.apply(out.trace[cursor]);
    return top_n_producers(state, kProducersPerRound);
  };
  out.headers = generate_block_schedule(elect, round_starts, {genesis, config.block_skip_rate, config.seed});
  return out;
}

std::string truth_json(const GroundTruth& truth, const std::string& trace_digest, const std::string& config_text) {
  auto names = [](const std::vector<AccountName>& v) {
    json a = json::array();
    for (const auto& n : v) a.push_back(n.str());
    return a;
  };
  json plants = json::array();
  for (const auto& p : truth.plants) {
    json roles = json::object();
    for (const auto& [role, v] : p.roles) roles[role] = names(v);
    json motifs = json::array();
    for (const auto& [shape, parts] : p.motifs) motifs.push_back({{"shape", std::string(to_string(shape))}, {"participants", names(parts)}});
    json months = json::array();
    for (const auto& m : p.active_months) months.push_back(m.str());
    plants.push_back({{"id", p.id},
                      {"kind", std::string(to_string(p.kind))},
                      {"members", names(p.members)},
                      {"roles", std::move(roles)},
                      {"motifs", std::move(motifs)},
                      {"active_months", std::move(months)},
                      {"action_seqs", p.action_seqs}});
  }
  const json doc = {{"trace_digest", trace_digest}, {"config", config_text}, {"plants", std::move(plants)}};
  return doc.dump(1);
}

TruthFile parse_truth_json(std::string_view text) {
  const json doc = json::parse(text.begin(), text.end(), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw ParseError("truth", "malformed JSON");
  auto names = [](const json& a) {
    std::vector<AccountName> v;
    for (const auto& n : a) v.emplace_back(n.get<std::string>());
    return v;
  };
  TruthFile out;
  try {
    out.trace_digest = doc.at("trace_digest").get<std::string>();
    for (const auto& p : doc.at("plants")) {
      PlantTruth pt;
      pt.id = p.at("id").get<std::size_t>();
      const auto kind = parse_plant_kind(p.at("kind").get<std::string>());
      if (!kind) throw ParseError("kind", "unknown plant kind");
      pt.kind = *kind;
      pt.members = names(p.at("members"));
      for (const auto& [role, v] : p.at("roles").items()) pt.roles[role] = names(v);
      for (const auto& m : p.at("motifs")) {
        const auto s = m.at("shape").get<std::string>();
        const MotifShape shape = s == "linear" ? MotifShape::Linear : s == "triangular" ? MotifShape::Triangular : MotifShape::Eight;
        pt.motifs.push_back({shape, names(m.at("participants"))});
      }
      pt.action_seqs = p.at("action_seqs").get<std::vector<std::uint64_t>>();
      out.truth.plants.push_back(std::move(pt));
    }
  } catch (const json::exception& e) {
    throw ParseError("truth", e.what());
  }
  return out;
}

}  // namespace dposf
