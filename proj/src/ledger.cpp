#include "dposf/ledger.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "dposf/errors.hpp"

namespace dposf {

namespace {

using nlohmann::json;

constexpr std::array<std::string_view, 6> kKindNames = {"newaccount", "delegatebw", "undelegatebw",
                                                        "regproducer", "regproxy", "voteproducer"};

const json& require(const json& obj, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end()) throw ParseError(field, "missing field");
  return *it;
}

AccountName name_field(const json& obj, const char* field) {
  const json& v = require(obj, field);
  if (!v.is_string()) throw ParseError(field, "expected string");
  const auto& s = v.get_ref<const std::string&>();
  if (!AccountName::is_valid(s)) throw ParseError(field, "invalid account name '" + s + "'");
  return AccountName(s);
}

std::int64_t int_field(const json& obj, const char* field) {
  const json& v = require(obj, field);
  if (!v.is_number_integer()) throw ParseError(field, "expected integer");
  return v.get<std::int64_t>();
}

std::uint64_t uint_field(const json& obj, const char* field) {
  const json& v = require(obj, field);
  if (!v.is_number_unsigned()) throw ParseError(field, "expected non-negative integer");
  return v.get<std::uint64_t>();
}

StakeAmount stake_field(const json& obj) {
  const std::int64_t units = int_field(obj, "stake");
  if (units < 0) throw ParseError("stake", "negative stake delta");
  return StakeAmount(units);
}

Payload parse_payload(ActionKind kind, const json& p) {
  if (!p.is_object()) throw ParseError("payload", "expected object");
  switch (kind) {
    case ActionKind::NewAccount:
      return NewAccount{name_field(p, "name")};
    case ActionKind::DelegateBw:
      return DelegateBw{stake_field(p)};
    case ActionKind::UndelegateBw:
      return UndelegateBw{stake_field(p)};
    case ActionKind::RegProducer:
      return RegProducer{};
    case ActionKind::RegProxy: {
      const json& v = require(p, "isproxy");
      if (!v.is_boolean()) throw ParseError("isproxy", "expected boolean");
      return RegProxy{v.get<bool>()};
    }
    case ActionKind::VoteProducer: {
      VoteProducer vote;
      if (auto it = p.find("proxy"); it != p.end() && !it->is_null()) {
        if (!it->is_string()) throw ParseError("proxy", "expected string");
        const auto& s = it->get_ref<const std::string&>();
        if (!s.empty()) {
          if (!AccountName::is_valid(s)) throw ParseError("proxy", "invalid account name '" + s + "'");
          vote.proxy = AccountName(s);
        }
      }
      if (auto it = p.find("producers"); it != p.end()) {
        if (!it->is_array()) throw ParseError("producers", "expected array");
        vote.producers.reserve(it->size());
        for (const auto& e : *it) {
          if (!e.is_string() || !AccountName::is_valid(e.get_ref<const std::string&>())) {
            throw ParseError("producers", "invalid account name " + e.dump());
          }
          vote.producers.emplace_back(e.get_ref<const std::string&>());
        }
      }
      return vote;
    }
  }
  throw ParseError("kind", "unknown kind");
}

json payload_json(const Payload& payload) {
  return std::visit(
      [](const auto& p) -> json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, NewAccount>) {
          return {{"name", p.created.str()}};
        } else if constexpr (std::is_same_v<T, DelegateBw> || std::is_same_v<T, UndelegateBw>) {
          return {{"stake", p.stake.units()}};
        } else if constexpr (std::is_same_v<T, RegProducer>) {
          return json::object();
        } else if constexpr (std::is_same_v<T, RegProxy>) {
          return {{"isproxy", p.is_proxy}};
        } else {
          json producers = json::array();
          for (const auto& n : p.producers) producers.push_back(n.str());
          return {{"proxy", p.proxy ? p.proxy->str() : std::string{}}, {"producers", std::move(producers)}};
        }
      },
      payload);
}

json parse_object(std::string_view line) {
  json obj = json::parse(line.begin(), line.end(), nullptr, /*allow_exceptions=*/false);
  if (obj.is_discarded()) throw ParseError("", "malformed JSON");
  if (!obj.is_object()) throw ParseError("", "expected JSON object");
  return obj;
}

template <typename T, typename Parse>
std::vector<T> read_lines(std::istream& in, Parse parse) {
  std::vector<T> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse(line));
    } catch (const ParseError& e) {
      throw ParseError(e.field(), "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace

AccountName::AccountName(std::string_view name) : value_(name) {
  if (!is_valid(name)) throw ParseError("name", "invalid account name '" + std::string(name) + "'");
}

bool AccountName::is_valid(std::string_view name) noexcept {
  if (name.empty() || name.size() > 12 || name.back() == '.') return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '1' && c <= '5') || c == '.';
  });
}

std::ostream& operator<<(std::ostream& os, const AccountName& name) { return os << name.str(); }

StakeAmount::StakeAmount(std::int64_t units) : units_(units) {
  if (units < 0) throw DomainError("stake must be non-negative");
}

StakeAmount StakeAmount::from_tokens(std::int64_t tokens) {
  if (tokens < 0) throw DomainError("stake must be non-negative");
  if (tokens > std::numeric_limits<std::int64_t>::max() / kUnitsPerToken) throw OverflowError("stake overflow");
  return StakeAmount(tokens * kUnitsPerToken);
}

StakeAmount StakeAmount::operator+(StakeAmount other) const {
  std::int64_t sum = 0;
  if (__builtin_add_overflow(units_, other.units_, &sum)) throw OverflowError("stake overflow");
  return StakeAmount(sum);
}

StakeAmount StakeAmount::operator-(StakeAmount other) const {
  if (other.units_ > units_) throw DomainError("stake would become negative");
  return StakeAmount(units_ - other.units_);
}

std::string_view to_string(ActionKind kind) noexcept { return kKindNames[static_cast<std::size_t>(kind)]; }

std::optional<ActionKind> parse_action_kind(std::string_view text) noexcept {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == text) return static_cast<ActionKind>(i);
  }
  return std::nullopt;
}

void validate(const Action& action) {
  if (const auto* vote = std::get_if<VoteProducer>(&action.payload)) {
    if (vote->proxy && !vote->producers.empty()) throw ParseError("payload", "ambiguous vote");
    if (vote->producers.size() > kMaxVoteTargets) throw ParseError("producers", "producers list exceeds 30");
    if (std::adjacent_find(vote->producers.begin(), vote->producers.end(), std::greater_equal<>{}) !=
        vote->producers.end()) {
      throw ParseError("producers", "producers list must be sorted ascending without duplicates");
    }
  }
}

double compute_vote_index(Timestamp t_vote, Timestamp t_init, Timestamp t_day) {
  if (t_day <= 0) throw DomainError("seconds per day must be positive");
  if (t_vote < t_init) throw DomainError("vote predates epoch");
  const Timestamp weeks = (t_vote - t_init) / (7 * t_day);
  return static_cast<double>(weeks) / 52.0;
}

VoteWeight compute_vote_weight(StakeAmount stake, double index) {
  if (!std::isfinite(index) || index < 0.0) throw DomainError("vote index must be finite and non-negative");
  // Split 2^index into an exact power of two and a fractional factor so that whole-year steps
  // scale the weight by exactly 2. Indices on the weekly grid are split in integer weeks, since
  // (k + 52) / 52 - 1 and k / 52 can differ in the last bit.
  double whole = std::floor(index);
  double frac = index - whole;
  const double weeks = std::nearbyint(index * 52.0);
  if (std::abs(index * 52.0 - weeks) < 1e-6 && weeks < 1e15) {
    whole = std::floor(weeks / 52.0);
    frac = (weeks - 52.0 * whole) / 52.0;
  }
  if (whole > std::numeric_limits<int>::max()) throw OverflowError("vote weight overflow");
  const double factor = std::ldexp(std::exp2(frac), static_cast<int>(whole));
  const double weight = 10'000.0 * stake.tokens() * factor;
  if (!std::isfinite(weight)) throw OverflowError("vote weight overflow");
  return weight;
}

bool weights_close(VoteWeight a, VoteWeight b, double rel_tol) noexcept {
  if (a == b) return true;
  return std::abs(a - b) <= rel_tol * std::max(std::abs(a), std::abs(b));
}

Action parse_action(std::string_view line) {
  const json obj = parse_object(line);
  const json& kind_v = require(obj, "kind");
  if (!kind_v.is_string()) throw ParseError("kind", "expected string");
  const auto kind = parse_action_kind(kind_v.get_ref<const std::string&>());
  if (!kind) throw ParseError("kind", "unknown kind '" + kind_v.get<std::string>() + "'");

  Action action{name_field(obj, "actor"), parse_payload(*kind, require(obj, "payload")), int_field(obj, "timestamp"),
                uint_field(obj, "block"), uint_field(obj, "seq")};
  validate(action);
  return action;
}

std::string serialize_action(const Action& action) {
  const json obj = {{"kind", std::string(to_string(action.kind()))},
                    {"actor", action.actor.str()},
                    {"timestamp", action.timestamp},
                    {"block", action.block_height},
                    {"seq", action.sequence},
                    {"payload", payload_json(action.payload)}};
  return obj.dump();
}

BlockHeader parse_header(std::string_view line) {
  const json obj = parse_object(line);
  return BlockHeader{uint_field(obj, "height"), name_field(obj, "producer"), int_field(obj, "timestamp")};
}

std::string serialize_header(const BlockHeader& header) {
  const json obj = {{"height", header.height}, {"producer", header.producer.str()}, {"timestamp", header.timestamp}};
  return obj.dump();
}

std::vector<Action> read_trace(std::istream& in) { return read_lines<Action>(in, parse_action); }

std::vector<BlockHeader> read_headers(std::istream& in) { return read_lines<BlockHeader>(in, parse_header); }

void write_trace(std::ostream& out, const std::vector<Action>& trace) {
  for (const auto& a : trace) out << serialize_action(a) << '\n';
}

void write_headers(std::ostream& out, const std::vector<BlockHeader>& headers) {
  for (const auto& h : headers) out << serialize_header(h) << '\n';
}

}  // namespace dposf
