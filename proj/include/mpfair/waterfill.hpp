#pragma once

#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpfair/partition.hpp"
#include "mpfair/topology.hpp"

namespace mpfair {

/// Per-source rates in Mbps, exact.
struct AllocationVector {
  std::map<SourceId, Rational> rates;

  const Rational& at(const SourceId& s) const { return rates.at(s); }
};

/// Witness of a source's bottleneck: a link, the root-to-leaf chain in that
/// link's contention tree, the share available at each chain node when the
/// source froze, and the chain position from which the whole subtree froze
/// together (0 = the entire link saturated).
struct BottleneckCertificate {
  LinkId link;
  std::vector<int> chain;        // node indices, root first
  std::vector<Rational> shares;  // shares[i] is the share of chain[i]; shares[0] == capacity
  int saturated_from = 0;
  Rational rate;
};

struct WaterfillResult {
  AllocationVector alloc;
  std::map<SourceId, BottleneckCertificate> certs;
  int rounds = 0;
};

inline Rational link_load(const Network& net, const AllocationVector& alloc, const LinkId& link) {
  Rational load(0);
  for (const auto& s : net.crossing[net.link_index.at(link)]) load += alloc.at(s);
  return load;
}

inline std::map<VcId, Rational> vc_sums(const Network& net, const AllocationVector& alloc) {
  std::map<VcId, Rational> sums;
  for (const auto& vc : net.vcs) {
    Rational sum(0);
    for (const auto& s : vc.sources) sum += alloc.at(s);
    sums[vc.id] = sum;
  }
  return sums;
}

namespace detail {

// Per-round annotation of one flattened tree.
struct TreeState {
  FlatTree tree;
  std::vector<int> unfrozen;        // unfrozen leaf count below node
  std::vector<Rational> frozen;     // frozen rate sum below node
  std::vector<Rational> share;      // share available to the node this round
  std::vector<Rational> max_slice;  // max leaf share below node (unfrozen leaves only)

  void annotate(const std::map<SourceId, Rational>& frozen_rates) {
    const int n = static_cast<int>(tree.nodes.size());
    unfrozen.assign(n, 0);
    frozen.assign(n, Rational(0));
    share.assign(n, Rational(0));
    max_slice.assign(n, Rational(-1));

    for (int i = n - 1; i >= 0; --i) {
      const auto& node = tree.nodes[i];
      if (tree.is_leaf(i)) {
        const SourceId& s = node.members.front();
        auto it = frozen_rates.find(s);
        if (it == frozen_rates.end()) unfrozen[i] = 1;
        else frozen[i] = it->second;
      }
      if (node.parent >= 0) {
        unfrozen[node.parent] += unfrozen[i];
        frozen[node.parent] += frozen[i];
      }
    }
    if (unfrozen[0] == 0) return;

    // top-down: fully frozen children keep what they consumed, the remainder
    // splits equally among children that still hold unfrozen sources
    share[0] = tree.capacity;
    for (int i = 0; i < n; ++i) {
      if (unfrozen[i] == 0) continue;
      const auto& node = tree.nodes[i];
      if (tree.is_leaf(i)) continue;
      Rational dead(0);
      int live = 0;
      for (int c : node.children) {
        if (unfrozen[c] == 0) dead += frozen[c];
        else ++live;
      }
      Rational rem = share[i] - dead;
      if (rem.is_negative()) throw std::logic_error("water-fill share went negative");
      Rational each = rem / Rational(live);
      for (int c : node.children)
        if (unfrozen[c] > 0) share[c] = each;
    }

    // bottom-up: largest unfrozen leaf share below each node
    for (int i = n - 1; i >= 0; --i) {
      if (unfrozen[i] == 0) continue;
      if (tree.is_leaf(i)) max_slice[i] = share[i];
      if (tree.nodes[i].parent >= 0 && unfrozen[i] > 0) {
        int p = tree.nodes[i].parent;
        if (max_slice[i] > max_slice[p]) max_slice[p] = max_slice[i];
      }
    }
  }
};

}  // namespace detail

/// Hierarchical max-min allocation by progressive freezing.
///
/// Each round recomputes, per link, the share every unfrozen source would get
/// by descending that link's contention tree; a source's tentative rate is the
/// minimum over its path. All sources attaining the global minimum whose
/// root-to-leaf chain fully saturates freeze at that rate; when no chain
/// saturates (equal split pinned above the contended node), all
/// minimum-attaining sources freeze anyway, which resolves ties in one step.
inline WaterfillResult water_fill(const Network& net, FairnessPolicy policy) {
  WaterfillResult result;
  std::vector<SourceId> all_sources;
  for (const auto& [s, vi] : net.vc_of_source) all_sources.push_back(s);
  if (all_sources.empty()) return result;

  std::vector<detail::TreeState> states;
  std::map<LinkId, int> state_of;
  for (const auto& l : net.links) {
    if (net.crossing[net.link_index.at(l.id)].empty()) continue;
    detail::TreeState st;
    st.tree = flatten(net, build_partition_tree(net, l.id, policy));
    state_of[l.id] = static_cast<int>(states.size());
    states.push_back(std::move(st));
  }

  std::map<SourceId, Rational> frozen;
  while (frozen.size() < all_sources.size()) {
    for (auto& st : states) st.annotate(frozen);

    // tentative = min leaf share over the path
    Rational m;
    bool have_m = false;
    std::map<SourceId, Rational> tentative;
    for (const auto& s : all_sources) {
      if (frozen.count(s)) continue;
      Rational t;
      bool have_t = false;
      for (int li : net.paths.at(s)) {
        const auto& st = states[state_of.at(net.links[li].id)];
        const Rational& slice = st.share[st.tree.leaf_of.at(s)];
        if (!have_t || slice < t) { t = slice; have_t = true; }
      }
      if (!have_t) throw std::logic_error("source crosses no links");
      tentative[s] = t;
      if (!have_m || t < m) { m = t; have_m = true; }
    }

    struct Candidate {
      SourceId source;
      BottleneckCertificate cert;
    };
    std::vector<Candidate> candidates;
    for (const auto& [s, t] : tentative) {
      if (t != m) continue;
      Candidate best;
      best.source = s;
      best.cert.saturated_from = std::numeric_limits<int>::max();
      for (int li : net.paths.at(s)) {
        const auto& st = states[state_of.at(net.links[li].id)];
        int leaf = st.tree.leaf_of.at(s);
        if (st.share[leaf] != m) continue;  // not a minimizing link
        auto chain = st.tree.chain_to(s);
        // saturation holds below a node once every unfrozen leaf under it is
        // pinned at m; the property is monotone toward the leaf
        int j = static_cast<int>(chain.size()) - 1;
        while (j > 0 && st.max_slice[chain[j - 1]] == m) --j;
        if (j < best.cert.saturated_from) {
          best.cert.link = st.tree.link;
          best.cert.chain = chain;
          best.cert.shares.clear();
          for (int node : chain) best.cert.shares.push_back(st.share[node]);
          best.cert.saturated_from = j;
          best.cert.rate = m;
        }
      }
      candidates.push_back(std::move(best));
    }

    bool any_full = false;
    for (const auto& c : candidates)
      if (c.cert.saturated_from == 0) any_full = true;

    for (auto& c : candidates) {
      if (any_full && c.cert.saturated_from != 0) continue;
      frozen[c.source] = m;
      result.alloc.rates[c.source] = m;
      result.certs[c.source] = std::move(c.cert);
    }
    ++result.rounds;
  }
  return result;
}

struct VerifyReport {
  bool ok = true;
  std::vector<std::string> violations;

  void fail(std::string msg) {
    ok = false;
    violations.push_back(std::move(msg));
  }
  std::string first() const { return violations.empty() ? "" : violations.front(); }
};

/// Checks an allocation against its bottleneck certificates:
/// (1) exact feasibility on every link, and (2) per source: the certified
/// chain exists in an independently rebuilt tree, the recorded shares are
/// consistent with the link capacity, every node of the saturated suffix is
/// consumed to exactly its share, and the source holds the maximum rate in
/// the saturated subtree.
inline VerifyReport verify_maxmin(const Network& net, FairnessPolicy policy,
                                  const AllocationVector& alloc,
                                  const std::map<SourceId, BottleneckCertificate>& certs) {
  VerifyReport report;
  for (const auto& [s, vi] : net.vc_of_source) {
    if (!alloc.rates.count(s)) report.fail("no rate for source " + s);
    else if (alloc.rates.at(s).is_negative()) report.fail("negative rate for source " + s);
  }
  if (!report.ok) return report;

  for (const auto& l : net.links) {
    const auto& crossing = net.crossing[net.link_index.at(l.id)];
    if (crossing.empty()) continue;
    Rational load = link_load(net, alloc, l.id);
    if (load > l.capacity_mbps)
      report.fail("link " + l.id + " overloaded: " + load.str() + " > " + l.capacity_mbps.str());
  }
  if (!report.ok) return report;

  std::map<LinkId, FlatTree> trees;
  for (const auto& [s, vi] : net.vc_of_source) {
    auto cit = certs.find(s);
    if (cit == certs.end()) {
      report.fail("no certificate for source " + s);
      continue;
    }
    const auto& cert = cit->second;
    auto tit = trees.find(cert.link);
    if (tit == trees.end())
      tit = trees.emplace(cert.link, flatten(net, build_partition_tree(net, cert.link, policy))).first;
    const FlatTree& tree = tit->second;

    if (!tree.leaf_of.count(s)) {
      report.fail("source " + s + " does not cross certified link " + cert.link);
      continue;
    }
    auto chain = tree.chain_to(s);
    if (chain != cert.chain) {
      report.fail("certificate chain for " + s + " does not match tree of " + cert.link);
      continue;
    }
    if (cert.shares.size() != chain.size() || cert.shares.front() != tree.capacity) {
      report.fail("certificate shares for " + s + " do not start at capacity of " + cert.link);
      continue;
    }
    if (cert.rate != alloc.at(s) || cert.shares.back() != cert.rate) {
      report.fail("certificate rate for " + s + " does not match allocation");
      continue;
    }
    if (cert.saturated_from < 0 || cert.saturated_from >= static_cast<int>(chain.size())) {
      report.fail("certificate for " + s + " has bad saturation index");
      continue;
    }
    for (size_t i = 1; i < cert.shares.size(); ++i)
      if (cert.shares[i] > cert.shares[i - 1]) {
        report.fail("certificate shares for " + s + " increase along the chain");
        break;
      }

    // the saturated suffix froze as one unit: in the final state each of its
    // nodes consumes exactly the share it held then. Shares of nodes above
    // the suffix may keep growing as siblings settle, so only feasibility
    // constrains them.
    for (size_t i = cert.saturated_from; i < chain.size(); ++i) {
      Rational consumed(0);
      for (const auto& member : tree.nodes[chain[i]].members) consumed += alloc.at(member);
      if (consumed != cert.shares[i]) {
        report.fail("link " + cert.link + " node " + tree.nodes[chain[i]].label +
                    " not saturated for " + s + ": " + consumed.str() + " != " +
                    cert.shares[i].str());
        break;
      }
    }

    // max-min within the bottleneck group: nobody below the saturated node
    // does better than the certified source
    for (const auto& member : tree.nodes[chain[cert.saturated_from]].members)
      if (alloc.at(member) > alloc.at(s)) {
        report.fail("source " + member + " outranks " + s + " inside its bottleneck group on " +
                    cert.link);
        break;
      }
  }
  return report;
}

/// Feasibility plus exact agreement with a freshly computed allocation; the
/// check applied to externally supplied allocation files.
inline VerifyReport verify_against_recompute(const Network& net, FairnessPolicy policy,
                                             const AllocationVector& alloc) {
  VerifyReport report;
  for (const auto& [s, vi] : net.vc_of_source)
    if (!alloc.rates.count(s)) report.fail("no rate for source " + s);
  if (!report.ok) return report;

  for (const auto& l : net.links) {
    if (net.crossing[net.link_index.at(l.id)].empty()) continue;
    Rational load = link_load(net, alloc, l.id);
    if (load > l.capacity_mbps)
      report.fail("link " + l.id + " overloaded: " + load.str() + " > " + l.capacity_mbps.str());
  }
  if (!report.ok) return report;

  WaterfillResult fresh = water_fill(net, policy);
  for (const auto& [s, r] : fresh.alloc.rates) {
    auto it = alloc.rates.find(s);
    if (it != alloc.rates.end() && it->second != r)
      report.fail("source " + s + ": expected " + r.str() + ", got " + it->second.str());
  }
  return report;
}

/// Rates under all four policies, for side-by-side reporting.
struct PolicyComparison {
  std::map<FairnessPolicy, WaterfillResult> results;
};

inline PolicyComparison compare_policies(const Network& net) {
  PolicyComparison cmp;
  for (FairnessPolicy p : kAllPolicies) cmp.results.emplace(p, water_fill(net, p));
  return cmp;
}

}  // namespace mpfair
