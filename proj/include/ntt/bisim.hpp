#pragma once

#include <algorithm>
#include <deque>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ntt/act.hpp"

namespace ntt {

/// Finite labelled transition system over state indices.
struct Lts {
  std::vector<TermPtr> states;  // may be empty for synthetic systems
  std::vector<std::string> label_names;
  /// trans[s] = sorted, deduplicated (label, target) pairs
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> trans;
  std::size_t size() const { return trans.size(); }
  bool bounded = false;

  void normalize() {
    for (auto& t : trans) {
      std::sort(t.begin(), t.end());
      t.erase(std::unique(t.begin(), t.end()), t.end());
    }
  }
};

/// Closure of `roots` under act transitions, breadth first up to `depth`.
inline Lts build_lts(const ObservationSystem& obs, const std::vector<TermPtr>& roots,
                     const std::vector<Observation>& ctxs, std::size_t depth, std::size_t cap) {
  Lts l;
  for (const auto& c : ctxs) l.label_names.push_back(c.label);
  TermMap<std::size_t> index;
  std::vector<std::size_t> node_depth;
  std::deque<std::size_t> queue;
  auto add = [&](const TermPtr& t, std::size_t d) -> std::optional<std::size_t> {
    if (auto it = index.find(t); it != index.end()) return it->second;
    if (l.states.size() >= std::max<std::size_t>(cap, 1)) {
      l.bounded = true;
      return std::nullopt;
    }
    l.states.push_back(t);
    l.trans.emplace_back();
    node_depth.push_back(d);
    index.emplace(t, l.states.size() - 1);
    queue.push_back(l.states.size() - 1);
    return l.states.size() - 1;
  };
  for (const auto& r : roots) add(obs.engine().canonicalize(r), 0);
  while (!queue.empty()) {
    std::size_t v = queue.front();
    queue.pop_front();
    auto steps = obs.act_steps(l.states[v], ctxs);
    if (node_depth[v] >= depth) {
      if (!steps.empty()) l.bounded = true;
      continue;
    }
    for (const auto& s : steps) {
      auto w = add(s.target, node_depth[v] + 1);
      if (w) l.trans[v].emplace_back(s.context, *w);
    }
  }
  l.normalize();
  return l;
}

/// Successive partitions of the states into bisimilarity classes; the last one
/// is the coarsest bisimulation. Block ids are numbered by first occurrence.
inline std::vector<std::vector<std::size_t>> refinement_history(const Lts& l) {
  std::vector<std::vector<std::size_t>> hist{std::vector<std::size_t>(l.size(), 0)};
  std::size_t blocks = l.size() ? 1 : 0;
  while (true) {
    const auto& cur = hist.back();
    std::map<std::pair<std::size_t, std::vector<std::pair<std::size_t, std::size_t>>>, std::size_t> ids;
    std::vector<std::size_t> next(l.size());
    for (std::size_t s = 0; s < l.size(); ++s) {
      std::vector<std::pair<std::size_t, std::size_t>> sig;
      for (const auto& [lab, t] : l.trans[s]) sig.emplace_back(lab, cur[t]);
      std::sort(sig.begin(), sig.end());
      sig.erase(std::unique(sig.begin(), sig.end()), sig.end());
      auto key = std::make_pair(cur[s], std::move(sig));
      auto it = ids.find(key);
      if (it == ids.end()) it = ids.emplace(std::move(key), ids.size()).first;
      next[s] = it->second;
    }
    if (ids.size() == blocks) break;
    blocks = ids.size();
    hist.push_back(std::move(next));
  }
  return hist;
}

inline std::vector<std::size_t> bisim_partition(const Lts& l) { return refinement_history(l).back(); }

/// Relation iteration of S(R) = {(p,q) | every move of one is matched by the
/// other into R}. From the full relation this reaches the greatest fixpoint;
/// from the empty relation the least one.
inline std::vector<std::vector<bool>> bisim_iterate(const Lts& l, bool greatest = true) {
  const std::size_t n = l.size();
  std::vector<std::vector<bool>> r(n, std::vector<bool>(n, greatest));
  auto matched = [&](std::size_t p, std::size_t q, const std::vector<std::vector<bool>>& rel) {
    for (const auto& [lab, p2] : l.trans[p]) {
      bool found = false;
      for (const auto& [lab2, q2] : l.trans[q])
        if (lab2 == lab && rel[p2][q2]) {
          found = true;
          break;
        }
      if (!found) return false;
    }
    return true;
  };
  while (true) {
    std::vector<std::vector<bool>> next(n, std::vector<bool>(n, false));
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = 0; q < n; ++q) {
        bool in = matched(p, q, r);
        if (in) {
          bool back = true;
          for (const auto& [lab, q2] : l.trans[q]) {
            bool found = false;
            for (const auto& [lab2, p2] : l.trans[p])
              if (lab2 == lab && r[p2][q2]) {
                found = true;
                break;
              }
            if (!found) {
              back = false;
              break;
            }
          }
          in = back;
        }
        next[p][q] = in;
      }
    if (next == r) return r;
    r = std::move(next);
  }
}

/// Labels along a path that tells p and q apart; empty when they are bisimilar.
inline std::vector<std::size_t> distinguishing_labels(const Lts& l, std::size_t p, std::size_t q,
                                                      const std::vector<std::vector<std::size_t>>& hist) {
  std::size_t k = 0;
  while (k < hist.size() && hist[k][p] == hist[k][q]) ++k;
  if (k == hist.size() || k == 0) return {};
  const auto& prev = hist[k - 1];
  auto sig = [&](std::size_t s) {
    std::set<std::pair<std::size_t, std::size_t>> out;
    for (const auto& [lab, t] : l.trans[s]) out.emplace(lab, prev[t]);
    return out;
  };
  auto sp = sig(p), sq = sig(q);
  bool from_p = true;
  std::pair<std::size_t, std::size_t> e{};
  bool found = false;
  for (const auto& x : sp)
    if (!sq.contains(x)) {
      e = x;
      found = true;
      break;
    }
  if (!found) {
    for (const auto& x : sq)
      if (!sp.contains(x)) {
        e = x;
        from_p = false;
        break;
      }
  }
  std::size_t a = from_p ? p : q;
  std::size_t b = from_p ? q : p;
  std::size_t a2 = 0;
  for (const auto& [lab, t] : l.trans[a])
    if (lab == e.first && prev[t] == e.second) {
      a2 = t;
      break;
    }
  std::vector<std::size_t> out{e.first};
  for (const auto& [lab, t] : l.trans[b])
    if (lab == e.first) {
      auto rest = distinguishing_labels(l, a2, t, hist);
      out.insert(out.end(), rest.begin(), rest.end());
      break;
    }
  return out;
}

struct BisimOptions {
  std::size_t depth = 4;
  std::size_t cap = 400;
  ActOptions act;
};

struct BisimResult {
  bool bisimilar = false;
  std::vector<std::string> distinguishing;
  bool bounded = false;
  std::size_t states = 0;
  std::size_t contexts = 0;
};

/// Strong bisimilarity of two processes on the act system over their name pool.
inline BisimResult bisimilar(const Engine& eng, const TermPtr& p, const TermPtr& q, const BisimOptions& opts = {}) {
  ObservationSystem obs(eng, opts.act);
  TermPtr cp = eng.canonicalize(p), cq = eng.canonicalize(q);
  auto names = obs.name_pool({cp, cq});
  auto ctxs = obs.contexts(names);
  Lts l = build_lts(obs, {cp, cq}, ctxs, opts.depth, opts.cap);
  BisimResult r;
  r.bounded = l.bounded;
  r.states = l.size();
  r.contexts = ctxs.size();
  std::size_t ip = 0, iq = 0;
  for (std::size_t i = 0; i < l.size(); ++i) {
    if (equal(l.states[i], cp)) ip = i;
    if (equal(l.states[i], cq)) iq = i;
  }
  auto hist = refinement_history(l);
  r.bisimilar = hist.back()[ip] == hist.back()[iq];
  if (!r.bisimilar)
    for (auto lab : distinguishing_labels(l, ip, iq, hist)) r.distinguishing.push_back(l.label_names[lab]);
  return r;
}

}  // namespace ntt
