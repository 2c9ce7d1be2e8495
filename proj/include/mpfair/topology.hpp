#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mpfair/rational.hpp"

namespace mpfair {

using SwitchId = std::string;
using LinkId = std::string;
using VcId = std::string;
using SourceId = std::string;
using DestId = std::string;
using PortId = int;

/// One end of a link: a switch port, a traffic source, or a destination.
struct Endpoint {
  enum class Kind { SwitchPort, Source, Dest };
  Kind kind = Kind::SwitchPort;
  std::string id;
  PortId port = -1;  // meaningful for SwitchPort only

  static Endpoint switch_port(SwitchId sw, PortId p) { return {Kind::SwitchPort, std::move(sw), p}; }
  static Endpoint source(SourceId s) { return {Kind::Source, std::move(s), -1}; }
  static Endpoint dest(DestId d) { return {Kind::Dest, std::move(d), -1}; }

  bool operator==(const Endpoint&) const = default;

  std::string str() const {
    switch (kind) {
      case Kind::SwitchPort: return "sw:" + id + ":" + std::to_string(port);
      case Kind::Source: return "src:" + id;
      case Kind::Dest: return "dst:" + id;
    }
    return "?";
  }
};

/// Unidirectional capacitated link.
struct Link {
  LinkId id;
  Endpoint from;
  Endpoint to;
  Rational capacity_mbps;
};

/// A sink tree: many sources, exactly one destination. Point-to-point is the
/// one-source degenerate case. `route[switch]` maps input port -> output port
/// for this VC's cells at that switch.
struct VirtualConnection {
  VcId id;
  DestId dest;
  std::vector<SourceId> sources;  // sorted, unique
  std::map<SwitchId, std::map<PortId, PortId>> route;
};

struct ValidationError {
  std::string message;
};

/// Validated network: topology plus derived lookup structure. Immutable after
/// validation; safe for concurrent reads.
class Network {
 public:
  std::vector<SwitchId> switches;  // sorted
  std::vector<Link> links;         // declaration order
  std::vector<VirtualConnection> vcs;

  std::map<SourceId, std::pair<SwitchId, PortId>> source_attach;
  std::map<DestId, std::pair<SwitchId, PortId>> dest_attach;
  std::map<LinkId, int> link_index;
  std::map<std::pair<SwitchId, PortId>, int> in_link;   // link arriving at (switch, port)
  std::map<std::pair<SwitchId, PortId>, int> out_link;  // link leaving (switch, port)

  // per source: ordered list of link indices from access link to the
  // destination access link
  std::map<SourceId, std::vector<int>> paths;
  // per source: owning VC index
  std::map<SourceId, int> vc_of_source;
  // per link index: sources crossing it (sorted)
  std::vector<std::vector<SourceId>> crossing;

  bool has_switch(const SwitchId& s) const {
    return std::binary_search(switches.begin(), switches.end(), s);
  }
  const Link& link(const LinkId& id) const { return links.at(link_index.at(id)); }
  const VirtualConnection& vc(const VcId& id) const {
    for (const auto& v : vcs)
      if (v.id == id) return v;
    throw std::out_of_range("unknown vc " + id);
  }
};

/// Ordered list of link ids from a source's access link to the destination's
/// access link.
struct SourcePath {
  SourceId source;
  std::vector<LinkId> links;
};

/// A (vc, input port) pair at a switch: the finest entity distinguishable
/// under VC merge. `members` are the VC's sources entering through that port.
struct Flow {
  VcId vc;
  SwitchId sw;
  PortId in_port;
  std::vector<SourceId> members;  // sorted
};

namespace detail {

inline std::pair<SwitchId, PortId> key(const SwitchId& s, PortId p) { return {s, p}; }

// Walks one source's route from its access attachment to the VC destination.
// Returns link indices, or an error message.
inline std::optional<std::string> walk_path(const Network& net, const VirtualConnection& vc,
                                            const SourceId& src, std::vector<int>& out) {
  out.clear();
  auto at = net.source_attach.find(src);
  if (at == net.source_attach.end())
    return "source " + src + " has no access link";
  auto [sw, port] = at->second;
  auto first = net.in_link.find(key(sw, port));
  if (first == net.in_link.end()) return "source " + src + " access link missing";
  out.push_back(first->second);

  size_t guard = net.switches.size() + 2;
  while (true) {
    if (out.size() > guard + 1)
      return "vc " + vc.id + ": route for source " + src + " loops (not a tree)";
    auto rit = vc.route.find(sw);
    if (rit == vc.route.end())
      return "vc " + vc.id + ": no route at switch " + sw + " for source " + src;
    auto pit = rit->second.find(port);
    if (pit == rit->second.end())
      return "vc " + vc.id + ": no route at switch " + sw + " port " +
             std::to_string(port) + " for source " + src;
    auto lout = net.out_link.find(key(sw, pit->second));
    if (lout == net.out_link.end())
      return "vc " + vc.id + ": no link out of " + sw + ":" + std::to_string(pit->second);
    const Link& l = net.links[lout->second];
    out.push_back(lout->second);
    if (l.to.kind == Endpoint::Kind::Dest) {
      if (l.to.id != vc.dest)
        return "vc " + vc.id + ": source " + src + " reaches " + l.to.id +
               " instead of " + vc.dest;
      return std::nullopt;
    }
    sw = l.to.id;
    port = l.to.port;
  }
}

}  // namespace detail

struct ValidationResult {
  std::optional<Network> network;
  std::vector<ValidationError> errors;
  bool ok() const { return network.has_value(); }
};

/// Structural validation: resolves every reference, derives attachments,
/// paths and per-link crossing sets, and reports all violations found.
inline ValidationResult validate_topology(const std::vector<SwitchId>& switch_ids,
                                          const std::vector<Link>& links,
                                          const std::vector<VirtualConnection>& vcs) {
  ValidationResult res;
  auto fail = [&res](std::string m) { res.errors.push_back({std::move(m)}); };

  Network net;
  net.switches = switch_ids;
  std::sort(net.switches.begin(), net.switches.end());
  for (size_t i = 1; i < net.switches.size(); ++i)
    if (net.switches[i] == net.switches[i - 1]) fail("duplicate switch id " + net.switches[i]);
  net.switches.erase(std::unique(net.switches.begin(), net.switches.end()), net.switches.end());

  net.links = links;
  for (int i = 0; i < static_cast<int>(net.links.size()); ++i) {
    const Link& l = net.links[i];
    if (net.link_index.count(l.id)) {
      fail("duplicate link id " + l.id);
      continue;
    }
    net.link_index[l.id] = i;
    if (!(l.capacity_mbps > Rational(0))) fail("link " + l.id + " capacity must be > 0");

    if (l.from.kind == Endpoint::Kind::Dest) fail("link " + l.id + " starts at a destination");
    if (l.to.kind == Endpoint::Kind::Source) fail("link " + l.id + " ends at a source");

    if (l.from.kind == Endpoint::Kind::SwitchPort) {
      if (!net.has_switch(l.from.id)) fail("link " + l.id + " from undeclared switch " + l.from.id);
      else if (!net.out_link.emplace(detail::key(l.from.id, l.from.port), i).second)
        fail("two links leave " + l.from.id + ":" + std::to_string(l.from.port));
    }
    if (l.to.kind == Endpoint::Kind::SwitchPort) {
      if (!net.has_switch(l.to.id)) fail("link " + l.id + " to undeclared switch " + l.to.id);
      else if (!net.in_link.emplace(detail::key(l.to.id, l.to.port), i).second)
        fail("two links arrive at " + l.to.id + ":" + std::to_string(l.to.port));
    }
    if (l.from.kind == Endpoint::Kind::Source) {
      if (l.to.kind != Endpoint::Kind::SwitchPort)
        fail("access link " + l.id + " must end at a switch port");
      else if (!net.source_attach.emplace(l.from.id, detail::key(l.to.id, l.to.port)).second)
        fail("source " + l.from.id + " attached twice");
    }
    if (l.to.kind == Endpoint::Kind::Dest) {
      if (l.from.kind != Endpoint::Kind::SwitchPort)
        fail("access link " + l.id + " must start at a switch port");
      else if (!net.dest_attach.emplace(l.to.id, detail::key(l.from.id, l.from.port)).second)
        fail("destination " + l.to.id + " attached twice");
    }
  }

  net.vcs = vcs;
  std::set<VcId> vc_ids;
  for (int vi = 0; vi < static_cast<int>(net.vcs.size()); ++vi) {
    auto& vc = net.vcs[vi];
    if (!vc_ids.insert(vc.id).second) fail("duplicate vc id " + vc.id);
    std::sort(vc.sources.begin(), vc.sources.end());
    vc.sources.erase(std::unique(vc.sources.begin(), vc.sources.end()), vc.sources.end());
    if (vc.sources.empty()) fail("vc " + vc.id + " has no sources");
    if (!net.dest_attach.count(vc.dest)) fail("vc " + vc.id + " destination " + vc.dest + " not attached");
    for (const auto& [sw, ports] : vc.route) {
      if (!net.has_switch(sw)) fail("vc " + vc.id + " routes through undeclared switch " + sw);
      // a sink tree leaves each switch through exactly one port
      std::set<PortId> outs;
      for (const auto& [in, out] : ports) outs.insert(out);
      if (outs.size() > 1)
        fail("vc " + vc.id + " route not a tree: two output ports at switch " + sw);
    }
    for (const auto& s : vc.sources) {
      if (!net.source_attach.count(s)) fail("vc " + vc.id + " source " + s + " not attached");
      else if (!net.vc_of_source.emplace(s, vi).second)
        fail("source " + s + " belongs to more than one vc");
    }
  }

  if (!res.errors.empty()) return res;

  // Paths and crossing sets; route errors surface here.
  net.crossing.assign(net.links.size(), {});
  for (const auto& vc : net.vcs) {
    for (const auto& s : vc.sources) {
      std::vector<int> p;
      if (auto err = detail::walk_path(net, vc, s, p)) {
        fail(*err);
        continue;
      }
      for (int li : p) net.crossing[li].push_back(s);
      net.paths[s] = std::move(p);
    }
  }
  for (auto& c : net.crossing) std::sort(c.begin(), c.end());

  if (!res.errors.empty()) return res;
  res.network = std::move(net);
  return res;
}

/// Path of a single source, by link id.
inline SourcePath source_path(const Network& net, const VcId& vc, const SourceId& src) {
  const auto& v = net.vc(vc);
  if (!std::binary_search(v.sources.begin(), v.sources.end(), src))
    throw std::invalid_argument("source " + src + " not in vc " + vc);
  SourcePath sp{src, {}};
  for (int li : net.paths.at(src)) sp.links.push_back(net.links[li].id);
  return sp;
}

/// Flows seen at (switch, output port): one per (vc, input port) pair with at
/// least one member source routed to that output.
inline std::vector<Flow> flows_at(const Network& net, const SwitchId& sw, PortId out_port) {
  std::vector<Flow> flows;
  for (const auto& vc : net.vcs) {
    std::map<PortId, std::vector<SourceId>> by_in;
    for (const auto& s : vc.sources) {
      const auto& path = net.paths.at(s);
      for (size_t i = 0; i + 1 < path.size(); ++i) {
        const Link& cur = net.links[path[i]];
        const Link& nxt = net.links[path[i + 1]];
        if (cur.to.kind == Endpoint::Kind::SwitchPort && cur.to.id == sw &&
            nxt.from.port == out_port && nxt.from.id == sw)
          by_in[cur.to.port].push_back(s);
      }
    }
    for (auto& [in_port, members] : by_in) {
      std::sort(members.begin(), members.end());
      flows.push_back(Flow{vc.id, sw, in_port, std::move(members)});
    }
  }
  return flows;
}

/// NumFlows for a link: the number of (vc, input port) pairs switched onto it.
/// A source access link carries exactly one flow.
inline int count_flows(const Network& net, const LinkId& link) {
  const Link& l = net.link(link);
  if (l.from.kind == Endpoint::Kind::Source) return net.crossing[net.link_index.at(link)].empty() ? 0 : 1;
  return static_cast<int>(flows_at(net, l.from.id, l.from.port).size());
}

}  // namespace mpfair
