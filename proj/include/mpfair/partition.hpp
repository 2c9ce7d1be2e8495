#pragma once

#include <map>
#include <string>
#include <vector>

#include "mpfair/topology.hpp"

namespace mpfair {

/// The four fairness definitions. Each maps to a deterministic per-link
/// partition-tree builder; the water-filling engine is policy-agnostic.
enum class FairnessPolicy { SourceBased, VcSource, FlowBased, VcFlow };

inline const char* policy_name(FairnessPolicy p) {
  switch (p) {
    case FairnessPolicy::SourceBased: return "source";
    case FairnessPolicy::VcSource: return "vc-source";
    case FairnessPolicy::FlowBased: return "flow";
    case FairnessPolicy::VcFlow: return "vc-flow";
  }
  return "?";
}

inline std::optional<FairnessPolicy> parse_policy(std::string_view s) {
  if (s == "source") return FairnessPolicy::SourceBased;
  if (s == "vc-source") return FairnessPolicy::VcSource;
  if (s == "flow") return FairnessPolicy::FlowBased;
  if (s == "vc-flow") return FairnessPolicy::VcFlow;
  return std::nullopt;
}

constexpr FairnessPolicy kAllPolicies[] = {FairnessPolicy::SourceBased, FairnessPolicy::VcSource,
                                           FairnessPolicy::FlowBased, FairnessPolicy::VcFlow};

/// Node of a per-link contention tree. Leaves are single sources crossing the
/// link; an internal node is a group competing as one unit at its parent.
struct PartitionNode {
  std::string label;
  std::vector<SourceId> members;  // sorted union of leaf sources below
  std::vector<PartitionNode> children;

  bool is_leaf() const { return children.empty(); }
};

struct PartitionTree {
  LinkId link;
  PartitionNode root;  // root children are the top-level competitors
};

namespace detail {

inline PartitionNode leaf_node(const SourceId& s) {
  return PartitionNode{"src:" + s, {s}, {}};
}

// Recursive flow subdivision: a multi-source flow that entered `sw` on
// `in_port` is split at the next upstream switch by (vc, input port), down to
// single sources at the access links.
inline PartitionNode flow_node(const Network& net, const VcId& vc, const SwitchId& sw,
                               PortId in_port, std::vector<SourceId> members) {
  PartitionNode node{"flow:" + vc + "@" + sw + ":" + std::to_string(in_port), std::move(members), {}};
  if (node.members.size() == 1) {
    node = leaf_node(node.members[0]);
    return node;
  }
  const Link& in = net.links[net.in_link.at({sw, in_port})];
  // >1 member implies the incoming link comes from another switch
  const SwitchId& up_sw = in.from.id;
  PortId up_port = in.from.port;
  for (const Flow& f : flows_at(net, up_sw, up_port)) {
    if (f.vc != vc) continue;
    node.children.push_back(flow_node(net, vc, up_sw, f.in_port, f.members));
  }
  return node;
}

}  // namespace detail

/// Builds the contention tree for one link under one policy. Leaves are
/// exactly the sources crossing the link.
inline PartitionTree build_partition_tree(const Network& net, const LinkId& link,
                                          FairnessPolicy policy) {
  const Link& l = net.link(link);
  const auto& crossing = net.crossing[net.link_index.at(link)];
  PartitionTree tree{link, PartitionNode{"link:" + link, crossing, {}}};

  if (crossing.empty()) return tree;
  if (l.from.kind == Endpoint::Kind::Source) {
    // access link: a single source, one leaf under every policy
    tree.root.children.push_back(detail::leaf_node(crossing.front()));
    return tree;
  }

  const SwitchId& sw = l.from.id;
  const PortId out_port = l.from.port;

  switch (policy) {
    case FairnessPolicy::SourceBased:
      for (const auto& s : crossing) tree.root.children.push_back(detail::leaf_node(s));
      break;

    case FairnessPolicy::VcSource:
      for (const auto& vc : net.vcs) {
        std::vector<SourceId> members;
        for (const auto& s : vc.sources)
          if (std::binary_search(crossing.begin(), crossing.end(), s)) members.push_back(s);
        if (members.empty()) continue;
        PartitionNode group{"vc:" + vc.id, members, {}};
        if (members.size() == 1) {
          group = detail::leaf_node(members[0]);
        } else {
          for (const auto& s : members) group.children.push_back(detail::leaf_node(s));
        }
        tree.root.children.push_back(std::move(group));
      }
      break;

    case FairnessPolicy::FlowBased:
      for (const Flow& f : flows_at(net, sw, out_port))
        tree.root.children.push_back(detail::flow_node(net, f.vc, sw, f.in_port, f.members));
      break;

    case FairnessPolicy::VcFlow:
      for (const auto& vc : net.vcs) {
        std::vector<PartitionNode> flows;
        std::vector<SourceId> members;
        for (const Flow& f : flows_at(net, sw, out_port)) {
          if (f.vc != vc.id) continue;
          members.insert(members.end(), f.members.begin(), f.members.end());
          flows.push_back(detail::flow_node(net, f.vc, sw, f.in_port, f.members));
        }
        if (flows.empty()) continue;
        std::sort(members.begin(), members.end());
        if (flows.size() == 1 && flows[0].is_leaf()) {
          tree.root.children.push_back(std::move(flows[0]));
        } else {
          tree.root.children.push_back(PartitionNode{"vc:" + vc.id, members, std::move(flows)});
        }
      }
      break;
  }
  return tree;
}

/// Flattened tree used by the allocation engine: preorder nodes with parent
/// links and a leaf lookup.
struct FlatTree {
  struct Node {
    int parent = -1;
    std::vector<int> children;
    std::vector<SourceId> members;
    std::string label;
  };
  LinkId link;
  Rational capacity;
  std::vector<Node> nodes;  // nodes[0] is the root
  std::map<SourceId, int> leaf_of;

  bool is_leaf(int i) const { return nodes[i].children.empty(); }

  /// Node index path from root to the leaf of `s`.
  std::vector<int> chain_to(const SourceId& s) const {
    std::vector<int> chain;
    for (int i = leaf_of.at(s); i >= 0; i = nodes[i].parent) chain.push_back(i);
    std::reverse(chain.begin(), chain.end());
    return chain;
  }
};

inline FlatTree flatten(const Network& net, const PartitionTree& tree) {
  FlatTree ft;
  ft.link = tree.link;
  ft.capacity = net.link(tree.link).capacity_mbps;
  auto add = [&ft](const PartitionNode& n, int parent, auto&& self) -> int {
    int idx = static_cast<int>(ft.nodes.size());
    ft.nodes.push_back({parent, {}, n.members, n.label});
    if (n.is_leaf() && n.members.size() == 1) ft.leaf_of[n.members[0]] = idx;
    for (const auto& c : n.children) {
      int ci = self(c, idx, self);
      ft.nodes[idx].children.push_back(ci);
    }
    return idx;
  };
  add(tree.root, -1, add);
  return ft;
}

}  // namespace mpfair
