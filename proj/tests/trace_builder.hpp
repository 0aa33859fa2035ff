#pragma once

#include <initializer_list>
#include <string>
#include <vector>

#include "dposf/ledger.hpp"
#include "dposf/replay.hpp"

namespace testkit {

using namespace dposf;

inline AccountName nm(const std::string& s) { return AccountName(s); }

inline std::vector<AccountName> names(std::initializer_list<const char*> list) {
  std::vector<AccountName> out;
  for (const char* s : list) out.emplace_back(s);
  return out;
}

// Appends actions with strictly increasing (block, seq); the clock only moves when told to.
class TraceBuilder {
 public:
  explicit TraceBuilder(Timestamp t0 = 1'530'000'000) : t_(t0) {}

  Timestamp now() const { return t_; }
  TraceBuilder& at(Timestamp t) {
    t_ = t;
    return *this;
  }
  TraceBuilder& advance(Timestamp dt) {
    t_ += dt;
    return *this;
  }

  TraceBuilder& add(const std::string& actor, Payload p) {
    trace_.push_back({nm(actor), std::move(p), t_, block_++, seq_++});
    return *this;
  }
  TraceBuilder& account(const std::string& name, const std::string& creator = "eosio") {
    return add(creator, NewAccount{nm(name)});
  }
  TraceBuilder& stake(const std::string& who, std::int64_t tokens) {
    return add(who, DelegateBw{StakeAmount::from_tokens(tokens)});
  }
  TraceBuilder& unstake(const std::string& who, std::int64_t tokens) {
    return add(who, UndelegateBw{StakeAmount::from_tokens(tokens)});
  }
  TraceBuilder& producer(const std::string& who) { return add(who, RegProducer{}); }
  TraceBuilder& proxy(const std::string& who, bool on = true) { return add(who, RegProxy{on}); }
  TraceBuilder& vote(const std::string& who, std::initializer_list<const char*> cands) {
    auto v = names(cands);
    std::sort(v.begin(), v.end());
    return add(who, VoteProducer{std::nullopt, v});
  }
  TraceBuilder& delegate(const std::string& who, const std::string& to) {
    return add(who, VoteProducer{nm(to), {}});
  }
  // New account with stake in one go.
  TraceBuilder& funded(const std::string& name, std::int64_t tokens) { return account(name).stake(name, tokens); }
  // Registered candidate with stake.
  TraceBuilder& candidate(const std::string& name, std::int64_t tokens = 1) {
    return funded(name, tokens).producer(name);
  }

  const std::vector<Action>& trace() const { return trace_; }

 private:
  std::vector<Action> trace_;
  Timestamp t_;
  std::uint64_t block_ = 1;
  std::uint64_t seq_ = 0;
};

}  // namespace testkit
