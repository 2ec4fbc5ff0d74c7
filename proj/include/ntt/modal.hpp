#pragma once

#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "ntt/predicate.hpp"
#include "ntt/step.hpp"

namespace ntt {

/// Finite transition system the modalities are evaluated on. `expanded[v]`
/// means the successors of v are all present; `pruned[v]` means v was left
/// unexpanded on purpose because the modality does not need its successors.
struct Graph {
  std::vector<TermPtr> nodes;
  std::vector<std::vector<std::size_t>> succ;
  std::vector<std::vector<std::string>> labels;  // parallel to succ
  std::vector<bool> expanded;
  std::vector<bool> pruned;
  std::size_t root = 0;
  bool cap_hit = false;

  std::size_t size() const { return nodes.size(); }

  bool complete() const {
    for (std::size_t v = 0; v < size(); ++v)
      if (!expanded[v] && !pruned[v]) return false;
    return !cap_hit;
  }

  Graph reversed() const {
    Graph r;
    r.nodes = nodes;
    r.succ.assign(size(), {});
    r.labels.assign(size(), {});
    for (std::size_t v = 0; v < size(); ++v)
      for (std::size_t i = 0; i < succ[v].size(); ++i) {
        r.succ[succ[v][i]].push_back(v);
        r.labels[succ[v][i]].push_back(labels[v][i]);
      }
    r.expanded.assign(size(), true);
    r.pruned.assign(size(), false);
    r.root = root;
    r.cap_hit = cap_hit;
    return r;
  }
};

inline Graph to_graph(const RewriteGraph& rg) {
  Graph g;
  g.nodes = rg.nodes;
  g.succ.assign(rg.nodes.size(), {});
  g.labels.assign(rg.nodes.size(), {});
  for (std::size_t v = 0; v < rg.nodes.size(); ++v)
    for (auto e : rg.out_edges[v]) {
      g.succ[v].push_back(rg.edges[e].to);
      g.labels[v].push_back(rg.edges[e].rule);
    }
  g.expanded = rg.expanded;
  g.pruned = rg.pruned.empty() ? std::vector<bool>(rg.nodes.size(), false) : rg.pruned;
  g.root = rg.root;
  g.cap_hit = rg.cap_hit;
  return g;
}

/// The nodes the modality's successors must be known for; others can be pruned.
/// Returns nullopt when every node must be expanded.
inline std::optional<bool> expand_when(Modality m) {
  switch (m) {
    case Modality::b_bang_circ:
    case Modality::b_star_circ: return false;  // stop at φ
    case Modality::b_star_bullet: return true;  // stop at ¬φ
    default: return std::nullopt;
  }
}

namespace detail {

inline std::vector<bool> ef(const Graph& g, const std::vector<bool>& phi) {
  std::vector<bool> z = phi;
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t v = 0; v < g.size(); ++v) {
      if (z[v]) continue;
      for (auto w : g.succ[v])
        if (z[w]) {
          z[v] = changed = true;
          break;
        }
    }
  }
  return z;
}

// greatest Z ⊆ keep with every node in Z expanded and all successors in Z
inline std::vector<bool> ag(const Graph& g, const std::vector<bool>& keep) {
  std::vector<bool> z(g.size());
  for (std::size_t v = 0; v < g.size(); ++v) z[v] = keep[v] && g.expanded[v];
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t v = 0; v < g.size(); ++v) {
      if (!z[v]) continue;
      for (auto w : g.succ[v])
        if (!z[w]) {
          z[v] = false;
          changed = true;
          break;
        }
    }
  }
  return z;
}

inline std::vector<bool> af(const Graph& g, const std::vector<bool>& phi) {
  std::vector<bool> z = phi;
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t v = 0; v < g.size(); ++v) {
      if (z[v] || !g.expanded[v] || g.succ[v].empty()) continue;
      bool all = true;
      for (auto w : g.succ[v]) all = all && z[w];
      if (all) z[v] = changed = true;
    }
  }
  return z;
}

}  // namespace detail

/// Extension of a behavioural modality over φ on a finite graph. Successor
/// sets of unexpanded nodes are unknown and the universal modalities treat
/// them as failing, so every answer under-approximates the full system.
inline std::vector<bool> modal_extension(const Graph& g0, Modality m, const std::vector<bool>& phi) {
  const Graph rev = is_past(m) ? g0.reversed() : Graph{};
  const Graph& g = is_past(m) ? rev : g0;
  const std::size_t n = g.size();
  std::vector<bool> out(n, false);
  switch (m) {
    case Modality::b_bang:
    case Modality::f_bang:
      for (std::size_t v = 0; v < n; ++v)
        for (auto w : g.succ[v]) out[v] = out[v] || phi[w];
      return out;
    case Modality::b_star:
    case Modality::f_star:
      for (std::size_t v = 0; v < n; ++v) {
        if (!g.expanded[v]) continue;
        bool all = true;
        for (auto w : g.succ[v]) all = all && phi[w];
        out[v] = all;
      }
      return out;
    case Modality::b_bang_circ:
    case Modality::f_bang_circ: return detail::ef(g, phi);
    case Modality::b_star_circ:
    case Modality::f_star_circ: return detail::af(g, phi);
    case Modality::b_star_bullet:
    case Modality::f_star_bullet: return detail::ag(g, phi);
    case Modality::b_bang_bullet:
    case Modality::f_bang_bullet: return detail::ag(g, detail::ef(g, phi));
  }
  return out;
}

/// Shortest path from the root to a node satisfying `target`, moving only through `through`.
inline std::vector<std::size_t> graph_path(const Graph& g, const std::vector<bool>& target,
                                           const std::vector<bool>& through) {
  std::vector<std::optional<std::size_t>> parent(g.size());
  std::vector<bool> seen(g.size(), false);
  std::deque<std::size_t> queue{g.root};
  seen[g.root] = true;
  while (!queue.empty()) {
    std::size_t v = queue.front();
    queue.pop_front();
    if (target[v]) {
      std::vector<std::size_t> path{v};
      while (parent[path.back()]) path.push_back(*parent[path.back()]);
      return {path.rbegin(), path.rend()};
    }
    if (!through[v]) continue;
    for (auto w : g.succ[v]) {
      if (seen[w]) continue;
      seen[w] = true;
      parent[w] = v;
      queue.push_back(w);
    }
  }
  return {};
}

/// A path from the root explaining the value of a future modality at the root:
/// for B!o a path to φ; for the universal forms, when false, a path to a
/// violating node. Empty when there is nothing to show.
inline std::vector<std::size_t> modal_witness(const Graph& g, Modality m, const std::vector<bool>& phi,
                                              const std::vector<bool>& ext) {
  if (is_past(m) || g.size() == 0) return {};
  const std::size_t n = g.size();
  std::vector<bool> all(n, true);
  switch (m) {
    case Modality::b_bang_circ:
      if (ext[g.root]) return graph_path(g, phi, all);
      return {};
    case Modality::b_star_bullet: {
      if (ext[g.root]) return {};
      std::vector<bool> bad(n);
      for (std::size_t v = 0; v < n; ++v) bad[v] = !phi[v] || !g.expanded[v];
      return graph_path(g, bad, phi);
    }
    case Modality::b_star_circ: {
      if (ext[g.root]) return {};
      std::vector<bool> bad(n), through(n);
      for (std::size_t v = 0; v < n; ++v) {
        through[v] = !ext[v];
        bad[v] = !ext[v] && (!g.expanded[v] || g.succ[v].empty());
      }
      auto p = graph_path(g, bad, through);
      if (!p.empty()) return p;
      // no dead end: show a path into a cycle avoiding φ
      std::vector<bool> cyc(n, false);
      for (std::size_t v = 0; v < n; ++v)
        for (auto w : g.succ[v]) cyc[w] = cyc[w] || (!ext[v] && !ext[w]);
      return graph_path(g, cyc, through);
    }
    case Modality::b_bang_bullet: {
      if (ext[g.root]) return {};
      auto reach = detail::ef(g, phi);
      std::vector<bool> bad(n);
      for (std::size_t v = 0; v < n; ++v) bad[v] = !reach[v] || !g.expanded[v];
      return graph_path(g, bad, all);
    }
    case Modality::b_bang:
    case Modality::b_star: {
      std::vector<bool> tgt(n, false);
      bool want = m == Modality::b_bang ? ext[g.root] : !ext[g.root];
      if (!want) return {};
      for (auto w : g.succ[g.root]) tgt[w] = m == Modality::b_bang ? phi[w] : !phi[w];
      std::vector<bool> only_root(n, false);
      only_root[g.root] = true;
      return graph_path(g, tgt, only_root);
    }
    default: return {};
  }
}

/// Targets of edges whose source is in `ext`.
inline std::vector<bool> step_forward(const Graph& g, const std::vector<bool>& ext) {
  std::vector<bool> out(g.size(), false);
  for (std::size_t v = 0; v < g.size(); ++v)
    if (ext[v])
      for (auto w : g.succ[v]) out[w] = true;
  return out;
}

/// Nodes all of whose incoming edges start in `ext`; nodes without incoming edges qualify.
inline std::vector<bool> secure_step_forward(const Graph& g, const std::vector<bool>& ext) {
  std::vector<bool> out(g.size(), true);
  for (std::size_t v = 0; v < g.size(); ++v)
    if (!ext[v])
      for (auto w : g.succ[v]) out[w] = false;
  return out;
}

/// True when some node whose successors matter was left unexpanded.
inline bool bounded(const Graph& g) { return !g.complete(); }

}  // namespace ntt
