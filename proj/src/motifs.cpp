#include "dposf/motifs.hpp"

#include <algorithm>
#include <tuple>

#include "dposf/errors.hpp"
#include "dposf/replay.hpp"

namespace dposf {

std::string_view to_string(MotifShape shape) noexcept {
  switch (shape) {
    case MotifShape::Linear:
      return "linear";
    case MotifShape::Triangular:
      return "triangular";
    case MotifShape::Eight:
      return "eight";
  }
  return "?";
}

std::vector<VoteEvent> build_vote_events(std::span<const Action> trace) {
  check_trace_order(trace);
  VotingState state;
  std::vector<VoteEvent> events;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const Action& a = trace[i];
    if (!state.apply(a).accepted()) continue;
    const auto* vote = std::get_if<VoteProducer>(&a.payload);
    if (!vote) continue;
    if (vote->proxy) {
      const bool src_cand = state.is_candidate(a.actor);
      for (const auto& c : state.find(*vote->proxy)->votes) events.push_back({a.actor, c, vote->proxy, a.timestamp, src_cand, i});
      continue;
    }
    for (const auto& c : vote->producers) events.push_back({a.actor, c, std::nullopt, a.timestamp, state.is_candidate(a.actor), i});
    if (!state.find(a.actor)->is_proxy) continue;
    for (const auto& d : state.delegators(a.actor)) {
      const bool src_cand = state.is_candidate(d);
      for (const auto& c : vote->producers) events.push_back({d, c, a.actor, a.timestamp, src_cand, i});
    }
  }
  return events;
}

namespace {

using PairKey = std::pair<AccountName, AccountName>;

struct IndexedEvent {
  Timestamp t;
  std::size_t idx;
};

// Events usable as motif edges, grouped by (src, dst) and by directness, each group time-sorted.
struct EventIndex {
  std::map<PairKey, std::vector<IndexedEvent>> direct;
  std::map<PairKey, std::vector<IndexedEvent>> proxied;

  explicit EventIndex(std::span<const VoteEvent> events) {
    for (std::size_t i = 0; i < events.size(); ++i) {
      const auto& e = events[i];
      if (!e.src_is_candidate || e.src == e.dst) continue;
      auto& bucket = e.via_proxy ? proxied[{e.src, e.dst}] : direct[{e.src, e.dst}];
      bucket.push_back({e.timestamp, i});
    }
    for (auto* m : {&direct, &proxied}) {
      for (auto& [_, v] : *m) {
        std::stable_sort(v.begin(), v.end(), [](const auto& x, const auto& y) { return x.t < y.t; });
      }
    }
  }
};

template <typename F>
void for_each_in_window(const std::vector<IndexedEvent>& sorted, Timestamp t, Timestamp window, F&& f) {
  auto lo = std::lower_bound(sorted.begin(), sorted.end(), t - window,
                             [](const IndexedEvent& e, Timestamp x) { return e.t < x; });
  for (auto it = lo; it != sorted.end() && it->t <= t + window; ++it) f(*it);
}

// Keeps, per (participants, month), the instance with the smallest (window_start, witness indices).
class InstanceSet {
 public:
  InstanceSet(MotifShape shape, std::span<const VoteEvent> events) : shape_(shape), events_(events) {}

  void offer(std::vector<AccountName> participants, std::size_t first, std::size_t second) {
    const Timestamp ws = std::min(events_[first].timestamp, events_[second].timestamp);
    auto key = std::make_pair(participants, month_of(ws));
    const auto rank = std::make_tuple(ws, first, second);
    auto it = best_.find(key);
    if (it != best_.end() && it->second.rank <= rank) return;
    best_.insert_or_assign(std::move(key), Candidate{rank, std::move(participants), first, second});
  }

  std::vector<MotifInstance> take() const {
    std::vector<MotifInstance> out;
    out.reserve(best_.size());
    for (const auto& [_, c] : best_) {
      out.push_back({shape_, c.participants, {events_[c.first], events_[c.second]}, std::get<0>(c.rank)});
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const auto& x, const auto& y) { return x.window_start < y.window_start; });
    return out;
  }

 private:
  struct Candidate {
    std::tuple<Timestamp, std::size_t, std::size_t> rank;
    std::vector<AccountName> participants;
    std::size_t first;
    std::size_t second;
  };

  MotifShape shape_;
  std::span<const VoteEvent> events_;
  std::map<std::pair<std::vector<AccountName>, YearMonth>, Candidate> best_;
};

void require_window(const MotifOptions& opts) {
  if (opts.window <= 0) throw DomainError("motif window must be positive");
}

}  // namespace

std::vector<MotifInstance> detect_linear(std::span<const VoteEvent> events, MotifOptions opts) {
  require_window(opts);
  const EventIndex index(events);
  InstanceSet found(MotifShape::Linear, events);
  for (const auto& [key, forward] : index.direct) {
    const auto& [a, b] = key;
    if (!(a < b)) continue;
    auto rev = index.direct.find({b, a});
    if (rev == index.direct.end()) continue;
    for (const auto& e1 : forward) {
      for_each_in_window(rev->second, e1.t, opts.window,
                         [&](const IndexedEvent& e2) { found.offer({a, b}, e1.idx, e2.idx); });
    }
  }
  return found.take();
}

std::vector<MotifInstance> detect_triangular(std::span<const VoteEvent> events, MotifOptions opts) {
  require_window(opts);
  const EventIndex index(events);
  InstanceSet found(MotifShape::Triangular, events);
  for (const auto& [key, forward] : index.proxied) {
    const auto& [a, b] = key;
    auto rev = index.direct.find({b, a});
    if (rev == index.direct.end()) continue;
    for (const auto& e1 : forward) {
      const AccountName& p = *events[e1.idx].via_proxy;
      for_each_in_window(rev->second, e1.t, opts.window,
                         [&](const IndexedEvent& e2) { found.offer({a, p, b}, e1.idx, e2.idx); });
    }
  }
  return found.take();
}

std::vector<MotifInstance> detect_eight(std::span<const VoteEvent> events, MotifOptions opts) {
  require_window(opts);
  const EventIndex index(events);
  InstanceSet found(MotifShape::Eight, events);
  for (const auto& [key, forward] : index.proxied) {
    const auto& [a, b] = key;
    if (!(a < b)) continue;
    auto rev = index.proxied.find({b, a});
    if (rev == index.proxied.end()) continue;
    for (const auto& e1 : forward) {
      const AccountName& p1 = *events[e1.idx].via_proxy;
      for_each_in_window(rev->second, e1.t, opts.window, [&](const IndexedEvent& e2) {
        const AccountName& p2 = *events[e2.idx].via_proxy;
        if (opts.strict_distinct_proxies && p1 == p2) return;
        found.offer({a, p1, b, p2}, e1.idx, e2.idx);
      });
    }
  }
  return found.take();
}

bool satisfies_shape(const MotifInstance& m, MotifOptions opts) {
  const auto& [e1, e2] = m.witness;
  const auto& p = m.participants;
  if (!e1.src_is_candidate || !e2.src_is_candidate) return false;
  if (e1.timestamp > e2.timestamp + opts.window || e2.timestamp > e1.timestamp + opts.window) return false;
  if (m.window_start != std::min(e1.timestamp, e2.timestamp)) return false;
  switch (m.shape) {
    case MotifShape::Linear:
      return p.size() == 2 && p[0] < p[1] && e1.src == p[0] && e1.dst == p[1] && !e1.via_proxy && e2.src == p[1] &&
             e2.dst == p[0] && !e2.via_proxy;
    case MotifShape::Triangular:
      return p.size() == 3 && p[0] != p[2] && e1.src == p[0] && e1.dst == p[2] && e1.via_proxy == p[1] &&
             e2.src == p[2] && e2.dst == p[0] && !e2.via_proxy;
    case MotifShape::Eight:
      return p.size() == 4 && p[0] < p[2] && e1.src == p[0] && e1.dst == p[2] && e1.via_proxy == p[1] &&
             e2.src == p[2] && e2.dst == p[0] && e2.via_proxy == p[3] &&
             !(opts.strict_distinct_proxies && p[1] == p[3]);
  }
  return false;
}

std::map<YearMonth, MotifCounts> motif_series(std::span<const MotifInstance> instances, std::optional<YearMonth> from,
                                              std::optional<YearMonth> to) {
  std::map<YearMonth, MotifCounts> out;
  if (from && to) {
    for (YearMonth m = *from; m <= *to; m = m.next()) out[m];
  }
  for (const auto& inst : instances) {
    auto& c = out[inst.month()];
    switch (inst.shape) {
      case MotifShape::Linear:
        ++c.linear;
        break;
      case MotifShape::Triangular:
        ++c.triangular;
        break;
      case MotifShape::Eight:
        ++c.eight;
        break;
    }
  }
  return out;
}

std::map<AccountName, std::set<AccountName>> motif_relation_graph(std::span<const MotifInstance> instances) {
  std::map<AccountName, std::set<AccountName>> g;
  for (const auto& m : instances) {
    const AccountName& a = m.participants.front();
    const AccountName& b = m.shape == MotifShape::Linear ? m.participants[1] : m.participants[2];
    g[a].insert(b);
    g[b].insert(a);
  }
  return g;
}

double average_clustering(const std::map<AccountName, std::set<AccountName>>& graph) {
  if (graph.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [v, nbrs] : graph) {
    const std::size_t k = nbrs.size();
    if (k < 2) continue;
    std::size_t links = 0;
    for (auto i = nbrs.begin(); i != nbrs.end(); ++i) {
      const auto& ni = graph.at(*i);
      for (auto j = std::next(i); j != nbrs.end(); ++j) links += ni.contains(*j);
    }
    sum += 2.0 * static_cast<double>(links) / static_cast<double>(k * (k - 1));
  }
  return sum / static_cast<double>(graph.size());
}

std::vector<std::set<AccountName>> connected_components(const std::map<AccountName, std::set<AccountName>>& graph) {
  std::set<AccountName> seen;
  std::vector<std::set<AccountName>> out;
  for (const auto& [start, _] : graph) {
    if (seen.contains(start)) continue;
    std::set<AccountName> comp{start};
    std::vector<AccountName> stack{start};
    seen.insert(start);
    while (!stack.empty()) {
      const AccountName v = stack.back();
      stack.pop_back();
      for (const auto& w : graph.at(v)) {
        if (seen.insert(w).second) {
          comp.insert(w);
          stack.push_back(w);
        }
      }
    }
    out.push_back(std::move(comp));
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.size() > y.size(); });
  return out;
}

}  // namespace dposf
