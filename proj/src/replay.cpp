#include "dposf/replay.hpp"

#include <algorithm>
#include <charconv>

#include <json.hpp>

#include "dposf/calendar.hpp"
#include "dposf/errors.hpp"

namespace dposf {

namespace {

using nlohmann::json;

const std::set<AccountName> kNoAccounts;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

const AccountRecord* VotingState::find(const AccountName& name) const {
  auto it = accounts_.find(name);
  return it == accounts_.end() ? nullptr : &it->second;
}

std::set<AccountName> VotingState::proxies() const {
  std::set<AccountName> out;
  for (const auto& [name, rec] : accounts_) {
    if (rec.is_proxy) out.insert(name);
  }
  return out;
}

const std::set<AccountName>& VotingState::delegators(const AccountName& proxy) const {
  auto it = delegators_.find(proxy);
  return it == delegators_.end() ? kNoAccounts : it->second;
}

StakeAmount VotingState::proxied_stake(const AccountName& proxy) const {
  StakeAmount sum;
  for (const auto& u : delegators(proxy)) sum += accounts_.at(u).stake;
  return sum;
}

bool VotingState::proxy_active(const AccountName& proxy) const {
  const auto* rec = find(proxy);
  return rec && rec->is_proxy;
}

VoteWeight VotingState::contribution(const AccountName& voter) const {
  const auto* rec = find(voter);
  if (!rec || rec->votes.empty() || !rec->last_vote_time) return 0.0;
  StakeAmount pooled = rec->stake;
  if (rec->is_proxy) pooled += proxied_stake(voter);
  return vote_weight_at(pooled, *rec->last_vote_time);
}

std::vector<AccountName> VotingState::effective_votes(const AccountName& account) const {
  const auto* rec = find(account);
  if (!rec) return {};
  if (rec->proxy) {
    if (!proxy_active(*rec->proxy)) return {};
    return accounts_.at(*rec->proxy).votes;
  }
  return rec->votes;
}

VoteWeight VotingState::exercised_weight(const AccountName& account) const {
  const auto* rec = find(account);
  if (!rec) return 0.0;
  if (rec->proxy) {
    if (!proxy_active(*rec->proxy)) return 0.0;
    const auto& p = accounts_.at(*rec->proxy);
    if (p.votes.empty() || !p.last_vote_time) return 0.0;
    return vote_weight_at(rec->stake, *p.last_vote_time);
  }
  if (rec->votes.empty() || !rec->last_vote_time) return 0.0;
  return vote_weight_at(rec->stake, *rec->last_vote_time);
}

std::optional<std::string> VotingState::check(const Action& action) const {
  if (action.block_height < as_of_.block_height) return "action out of order";
  try {
    validate(action);
  } catch (const ParseError& e) {
    return std::string(e.what());
  }
  const auto* actor = find(action.actor);
  const bool is_new_account = action.kind() == ActionKind::NewAccount;
  if (!actor && !(is_new_account && action.actor == kSystemAccount)) return "unknown account " + action.actor.str();

  return std::visit(
      overloaded{
          [&](const NewAccount& p) -> std::optional<std::string> {
            if (accounts_.contains(p.created)) return "account " + p.created.str() + " already exists";
            return std::nullopt;
          },
          [&](const DelegateBw& p) -> std::optional<std::string> {
            std::int64_t sum = 0;
            if (__builtin_add_overflow(actor->stake.units(), p.stake.units(), &sum)) return "stake overflow";
            return std::nullopt;
          },
          [&](const UndelegateBw& p) -> std::optional<std::string> {
            if (p.stake > actor->stake) return "undelegatebw exceeds staked amount";
            return std::nullopt;
          },
          [&](const RegProducer&) -> std::optional<std::string> { return std::nullopt; },
          [&](const RegProxy& p) -> std::optional<std::string> {
            if (p.is_proxy && actor->proxy) return "account delegating to a proxy cannot register as proxy";
            return std::nullopt;
          },
          [&](const VoteProducer& p) -> std::optional<std::string> {
            if (action.timestamp < kVoteEpoch) return "vote predates epoch";
            if (p.proxy) {
              if (*p.proxy == action.actor) return "cannot proxy to self";
              if (!proxy_active(*p.proxy)) return "account " + p.proxy->str() + " is not a registered proxy";
              if (actor->is_proxy) return "a registered proxy cannot delegate to a proxy";
              return std::nullopt;
            }
            for (const auto& c : p.producers) {
              if (!candidates_.contains(c)) return "vote for unregistered candidate " + c.str();
            }
            return std::nullopt;
          },
      },
      action.payload);
}

void VotingState::refresh(const AccountName& voter, std::set<AccountName>& dirty) {
  const VoteWeight now = contribution(voter);
  VoteWeight& before = applied_[voter];
  if (now != before) {
    for (const auto& c : accounts_.at(voter).votes) dirty.insert(c);
  }
  before = now;
}

void VotingState::recompute(const std::set<AccountName>& dirty) {
  for (const auto& c : dirty) {
    VoteWeight sum = 0.0;
    if (auto it = candidate_voters_.find(c); it != candidate_voters_.end()) {
      for (const auto& v : it->second) sum += applied_[v];
    }
    candidates_[c] = sum;
  }
}

ApplyResult VotingState::apply(const Action& action) {
  ApplyResult result;
  if (auto why = check(action)) {
    result.rejection = std::move(why);
    return result;
  }

  std::set<AccountName> dirty;
  const AccountName& actor = action.actor;

  std::visit(
      overloaded{
          [&](const NewAccount& p) {
            AccountRecord rec;
            rec.creator = actor;
            accounts_.emplace(p.created, std::move(rec));
          },
          [&](const DelegateBw& p) {
            auto& rec = accounts_.at(actor);
            rec.stake += p.stake;
            refresh(actor, dirty);
            if (rec.proxy) refresh(*rec.proxy, dirty);
            result.touched.push_back(actor);
          },
          [&](const UndelegateBw& p) {
            auto& rec = accounts_.at(actor);
            rec.stake -= p.stake;
            refresh(actor, dirty);
            if (rec.proxy) refresh(*rec.proxy, dirty);
            result.touched.push_back(actor);
          },
          [&](const RegProducer&) {
            candidates_.try_emplace(actor, 0.0);
            candidate_voters_.try_emplace(actor);
          },
          [&](const RegProxy& p) {
            auto& rec = accounts_.at(actor);
            const bool was = rec.is_proxy;
            rec.is_proxy = p.is_proxy;
            const auto& pooled = delegators(actor);
            if (was && !p.is_proxy && !pooled.empty()) {
              result.notice = "proxy " + actor.str() + " deregistered with " + std::to_string(pooled.size()) +
                              " delegators; their weight is suspended";
            }
            refresh(actor, dirty);
            result.touched.push_back(actor);
            result.touched.insert(result.touched.end(), pooled.begin(), pooled.end());
          },
          [&](const VoteProducer& p) {
            auto& rec = accounts_.at(actor);
            // Withdraw the old direct votes and the old delegation.
            for (const auto& c : rec.votes) {
              candidate_voters_[c].erase(actor);
              dirty.insert(c);
            }
            rec.votes.clear();
            applied_[actor] = 0.0;
            if (rec.proxy) {
              const AccountName old = *rec.proxy;
              delegators_[old].erase(actor);
              rec.proxy.reset();
              refresh(old, dirty);
            }

            rec.last_vote_time = action.timestamp;
            if (p.proxy) {
              rec.proxy = *p.proxy;
              delegators_[*p.proxy].insert(actor);
              refresh(*p.proxy, dirty);
            } else {
              rec.votes = p.producers;
              for (const auto& c : rec.votes) candidate_voters_[c].insert(actor);
              applied_[actor] = contribution(actor);
              dirty.insert(rec.votes.begin(), rec.votes.end());
            }
            result.touched.push_back(actor);
            const auto& pooled = delegators(actor);
            result.touched.insert(result.touched.end(), pooled.begin(), pooled.end());
          },
      },
      action.payload);

  recompute(dirty);
  as_of_ = {action.block_height, action.timestamp};
  return result;
}

VotingState apply_action(VotingState state, const Action& action) {
  auto r = state.apply(action);
  if (r.rejection) throw DataError(*r.rejection);
  return state;
}

void check_trace_order(std::span<const Action> trace) {
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (!(trace[i - 1].order_key() < trace[i].order_key())) {
      throw DataError("trace not sorted by (block, seq) at action " + std::to_string(i) + " (block " +
                      std::to_string(trace[i].block_height) + ", seq " + std::to_string(trace[i].sequence) + ")");
    }
  }
}

namespace {

void record(ReplayLog& log, std::size_t i, const Action& a, const ApplyResult& r) {
  if (r.rejection) log.rejected.push_back({i, a.block_height, a.sequence, *r.rejection});
  if (r.notice) log.notices.push_back({i, a.block_height, a.sequence, *r.notice});
}

}  // namespace

ReplayResult replay(std::span<const Action> trace) {
  check_trace_order(trace);
  ReplayResult out;
  for (std::size_t i = 0; i < trace.size(); ++i) record(out.log, i, trace[i], out.state.apply(trace[i]));
  return out;
}

VotingSnapshot snapshot(const VotingState& state, Timestamp t) {
  VotingSnapshot snap;
  snap.taken_at = t;
  for (const auto& [name, rec] : state.accounts()) {
    if (rec.votes.empty() && !rec.proxy && !rec.is_proxy) continue;
    VoterView v;
    v.effective = state.effective_votes(name);
    v.stake = rec.stake;
    v.is_proxy = rec.is_proxy;
    v.proxied_stake = rec.is_proxy ? state.proxied_stake(name) : StakeAmount{};
    v.proxy = rec.proxy;
    v.weight = state.exercised_weight(name);
    snap.per_voter.emplace(name, std::move(v));
  }
  snap.per_candidate = state.candidates();
  return snap;
}

std::vector<AccountName> top_n_producers(const VotingState& state, std::size_t n) {
  if (n == 0) throw DomainError("n must be at least 1");
  std::vector<std::pair<AccountName, VoteWeight>> ranked(state.candidates().begin(), state.candidates().end());
  const std::size_t k = std::min(n, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k), ranked.end(),
                    [](const auto& a, const auto& b) {
                      if (a.second != b.second) return a.second > b.second;
                      return a.first < b.first;
                    });
  std::vector<AccountName> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(ranked[i].first);
  return out;
}

SnapshotCadence SnapshotCadence::parse(std::string_view text) {
  if (text == "monthly") return every_month();
  if (text.size() < 2) throw ConfigError("invalid snapshot cadence '" + std::string(text) + "'");
  Timestamp unit = 0;
  switch (text.back()) {
    case 'd':
      unit = kSecondsPerDay;
      break;
    case 'h':
      unit = 3600;
      break;
    case 's':
      unit = 1;
      break;
    default:
      throw ConfigError("invalid snapshot cadence '" + std::string(text) + "'");
  }
  Timestamp n = 0;
  const auto digits = text.substr(0, text.size() - 1);
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || n <= 0) {
    throw ConfigError("invalid snapshot cadence '" + std::string(text) + "'");
  }
  return every(n * unit);
}

std::vector<Timestamp> sample_times(Timestamp first, Timestamp last, SnapshotCadence cadence) {
  std::vector<Timestamp> out;
  if (last < first) return out;
  if (cadence.monthly) {
    for (YearMonth m = month_of(first); month_start(m) <= last; m = m.next()) out.push_back(month_start(m.next()) - 1);
  } else {
    if (cadence.period <= 0) throw ConfigError("snapshot period must be positive");
    for (Timestamp t = first + cadence.period - 1;; t += cadence.period) {
      out.push_back(t);
      if (t >= last) break;
    }
  }
  return out;
}

SnapshotSeries replay_with_snapshots(std::span<const Action> trace, std::span<const Timestamp> times) {
  check_trace_order(trace);
  SnapshotSeries out;
  auto& state = out.result.state;
  std::size_t next = 0;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    while (next < times.size() && trace[i].timestamp > times[next]) out.snapshots.push_back(snapshot(state, times[next++]));
    record(out.result.log, i, trace[i], state.apply(trace[i]));
  }
  while (next < times.size()) out.snapshots.push_back(snapshot(state, times[next++]));
  return out;
}

SnapshotSeries replay_with_snapshots(std::span<const Action> trace, SnapshotCadence cadence) {
  std::vector<Timestamp> times;
  if (!trace.empty()) {
    const auto [lo, hi] = std::minmax_element(trace.begin(), trace.end(),
                                              [](const Action& a, const Action& b) { return a.timestamp < b.timestamp; });
    times = sample_times(lo->timestamp, hi->timestamp, cadence);
  }
  return replay_with_snapshots(trace, times);
}

namespace {

json names_json(const std::vector<AccountName>& names) {
  json arr = json::array();
  for (const auto& n : names) arr.push_back(n.str());
  return arr;
}

json opt_name(const std::optional<AccountName>& n) { return n ? json(n->str()) : json(nullptr); }

}  // namespace

std::string canonical_state_json(const VotingState& state) {
  json accounts = json::object();
  for (const auto& [name, rec] : state.accounts()) {
    accounts[name.str()] = {{"stake", rec.stake.units()},
                            {"last_vote_time", rec.last_vote_time ? json(*rec.last_vote_time) : json(nullptr)},
                            {"votes", names_json(rec.votes)},
                            {"proxy", opt_name(rec.proxy)},
                            {"is_proxy", rec.is_proxy},
                            {"creator", opt_name(rec.creator)}};
  }
  json candidates = json::object();
  for (const auto& [name, w] : state.candidates()) candidates[name.str()] = w;
  const json doc = {{"as_of", {{"block", state.as_of().block_height}, {"timestamp", state.as_of().timestamp}}},
                    {"accounts", std::move(accounts)},
                    {"candidates", std::move(candidates)}};
  return doc.dump();
}

std::string snapshot_json(const VotingSnapshot& snap) {
  json voters = json::object();
  for (const auto& [name, v] : snap.per_voter) {
    voters[name.str()] = {{"effective", names_json(v.effective)}, {"stake", v.stake.units()},
                          {"is_proxy", v.is_proxy},               {"proxied_stake", v.proxied_stake.units()},
                          {"proxy", opt_name(v.proxy)},           {"weight", v.weight}};
  }
  json candidates = json::object();
  for (const auto& [name, w] : snap.per_candidate) candidates[name.str()] = w;
  const json doc = {{"taken_at", snap.taken_at}, {"voters", std::move(voters)}, {"candidates", std::move(candidates)}};
  return doc.dump();
}

}  // namespace dposf
