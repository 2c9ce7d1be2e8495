#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mpfair/topology.hpp"

namespace mpfair {

/// Parsed scenario: topology and VC declarations plus free-form parameters.
/// Validation (reference resolution, tree checks) happens in validate().
struct Scenario {
  std::vector<SwitchId> switches;
  std::vector<Link> links;
  std::vector<VirtualConnection> vcs;
  std::map<std::string, std::string> params;

  ValidationResult validate() const { return validate_topology(switches, links, vcs); }
};

struct ParseError {
  int line = 0;
  std::string message;

  std::string str() const { return "line " + std::to_string(line) + ": " + message; }
};

struct ParseResult {
  std::optional<Scenario> scenario;
  std::vector<ParseError> errors;
  bool ok() const { return scenario.has_value(); }
};

namespace detail {

inline std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream is(line);
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

inline bool parse_endpoint(const std::string& tok, Endpoint& out) {
  auto c1 = tok.find(':');
  if (c1 == std::string::npos) return false;
  std::string kind = tok.substr(0, c1);
  std::string rest = tok.substr(c1 + 1);
  if (kind == "src") {
    if (rest.empty()) return false;
    out = Endpoint::source(rest);
    return true;
  }
  if (kind == "dst") {
    if (rest.empty()) return false;
    out = Endpoint::dest(rest);
    return true;
  }
  if (kind == "sw") {
    auto c2 = rest.find(':');
    if (c2 == std::string::npos) return false;
    std::string id = rest.substr(0, c2);
    std::string port = rest.substr(c2 + 1);
    if (id.empty() || port.empty()) return false;
    for (char ch : port)
      if (ch < '0' || ch > '9') return false;
    out = Endpoint::switch_port(id, std::stoi(port));
    return true;
  }
  return false;
}

}  // namespace detail

/// Line-oriented scenario format:
///   switch <id>
///   link <id> <from> <to> <capacity_mbps>      endpoints: sw:<id>:<port> | src:<id> | dst:<id>
///   vc <id> dst <id> sources <id,...>
///   route <vc> <switch> <in_port> -> <out_port>
///   param <key> <value>
/// `#` starts a comment. Capacities accept decimals and fractions (50, 125/3).
inline ParseResult parse_scenario(const std::string& text) {
  ParseResult res;
  Scenario sc;
  auto fail = [&res](int line, std::string msg) { res.errors.push_back({line, std::move(msg)}); };

  std::istringstream is(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(is, raw)) {
    ++lineno;
    auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    auto toks = detail::split_ws(raw);
    if (toks.empty()) continue;
    const std::string& kw = toks[0];

    if (kw == "switch") {
      if (toks.size() != 2) { fail(lineno, "expected: switch <id>"); continue; }
      sc.switches.push_back(toks[1]);
    } else if (kw == "link") {
      if (toks.size() != 5) { fail(lineno, "expected: link <id> <from> <to> <capacity>"); continue; }
      Link l;
      l.id = toks[1];
      if (!detail::parse_endpoint(toks[2], l.from)) { fail(lineno, "bad endpoint " + toks[2]); continue; }
      if (!detail::parse_endpoint(toks[3], l.to)) { fail(lineno, "bad endpoint " + toks[3]); continue; }
      if (!Rational::parse(toks[4], l.capacity_mbps)) { fail(lineno, "malformed rational " + toks[4]); continue; }
      sc.links.push_back(std::move(l));
    } else if (kw == "vc") {
      if (toks.size() != 6 || toks[2] != "dst" || toks[4] != "sources") {
        fail(lineno, "expected: vc <id> dst <id> sources <id,...>");
        continue;
      }
      VirtualConnection vc;
      vc.id = toks[1];
      vc.dest = toks[3];
      std::string cur;
      for (char c : toks[5] + ",") {
        if (c == ',') {
          if (!cur.empty()) vc.sources.push_back(cur);
          cur.clear();
        } else {
          cur += c;
        }
      }
      if (vc.sources.empty()) { fail(lineno, "vc " + vc.id + " has no sources"); continue; }
      sc.vcs.push_back(std::move(vc));
    } else if (kw == "route") {
      if (toks.size() != 6 || toks[4] != "->") {
        fail(lineno, "expected: route <vc> <switch> <in_port> -> <out_port>");
        continue;
      }
      VirtualConnection* vc = nullptr;
      for (auto& v : sc.vcs)
        if (v.id == toks[1]) vc = &v;
      if (!vc) { fail(lineno, "route for undeclared vc " + toks[1]); continue; }
      int in_port, out_port;
      try {
        in_port = std::stoi(toks[3]);
        out_port = std::stoi(toks[5]);
      } catch (const std::exception&) {
        fail(lineno, "bad port number");
        continue;
      }
      auto [it, inserted] = vc->route[toks[2]].emplace(in_port, out_port);
      if (!inserted && it->second != out_port)
        fail(lineno, "vc " + vc->id + " route not a tree: two output ports for " + toks[2] +
                         ":" + toks[3]);
    } else if (kw == "param") {
      if (toks.size() != 3) { fail(lineno, "expected: param <key> <value>"); continue; }
      sc.params[toks[1]] = toks[2];
    } else {
      fail(lineno, "unknown section " + kw);
    }
  }
  if (!res.errors.empty()) return res;
  res.scenario = std::move(sc);
  return res;
}

/// Re-emits a scenario in the canonical section order; parse(emit(s)) is
/// structurally equal to s.
inline std::string emit_scenario(const Scenario& sc) {
  std::ostringstream os;
  for (const auto& s : sc.switches) os << "switch " << s << "\n";
  for (const auto& l : sc.links)
    os << "link " << l.id << " " << l.from.str() << " " << l.to.str() << " "
       << l.capacity_mbps.str() << "\n";
  for (const auto& vc : sc.vcs) {
    os << "vc " << vc.id << " dst " << vc.dest << " sources ";
    for (size_t i = 0; i < vc.sources.size(); ++i) os << (i ? "," : "") << vc.sources[i];
    os << "\n";
  }
  for (const auto& vc : sc.vcs)
    for (const auto& [sw, ports] : vc.route)
      for (const auto& [in, out] : ports)
        os << "route " << vc.id << " " << sw << " " << in << " -> " << out << "\n";
  for (const auto& [k, v] : sc.params) os << "param " << k << " " << v << "\n";
  return os.str();
}

// The two canonical example configurations: a shared downstream bottleneck
// and an upstream 50 Mbps bottleneck with leftover capacity claimed further
// down. The eight reference allocation vectors pin these chains down.
inline const char* kExample1Text = R"(# example1: shared downstream bottleneck on LINK3
# multipoint VC M = {S1,S2,S3} -> dS1, point-to-point VC A = {S_A} -> dS_A
switch Sw1
switch Sw2
switch Sw3
switch Sw4
link AS1 src:S1 sw:Sw1:1 150
link AS2 src:S2 sw:Sw2:1 150
link AS3 src:S3 sw:Sw3:1 150
link ASA src:S_A sw:Sw3:2 150
link LINK1 sw:Sw1:10 sw:Sw2:0 150
link LINK2 sw:Sw2:10 sw:Sw3:0 150
link LINK3 sw:Sw3:10 sw:Sw4:0 150
link AD1 sw:Sw4:10 dst:dS1 150
link ADA sw:Sw4:11 dst:dS_A 150
vc M dst dS1 sources S1,S2,S3
vc A dst dS_A sources S_A
route M Sw1 1 -> 10
route M Sw2 0 -> 10
route M Sw2 1 -> 10
route M Sw3 0 -> 10
route M Sw3 1 -> 10
route M Sw4 0 -> 10
route A Sw3 2 -> 10
route A Sw4 0 -> 11
)";

inline const char* kExample2Text = R"(# example2: upstream bottleneck, LINK1 is 50 Mbps
# multipoint VC M = {S1,S2,S3,S4} -> dS1, point-to-point VC A = {S_A} -> dS_A
switch Sw1
switch Sw2
switch Sw3
switch Sw4
link AS1 src:S1 sw:Sw1:1 150
link AS2 src:S2 sw:Sw1:2 150
link ASA src:S_A sw:Sw1:3 150
link AS3 src:S3 sw:Sw2:1 150
link AS4 src:S4 sw:Sw3:1 150
link LINK1 sw:Sw1:10 sw:Sw2:0 50
link LINK2 sw:Sw2:10 sw:Sw3:0 150
link LINK3 sw:Sw3:10 sw:Sw4:0 150
link AD1 sw:Sw4:10 dst:dS1 150
link ADA sw:Sw3:11 dst:dS_A 150
vc M dst dS1 sources S1,S2,S3,S4
vc A dst dS_A sources S_A
route M Sw1 1 -> 10
route M Sw1 2 -> 10
route M Sw2 0 -> 10
route M Sw2 1 -> 10
route M Sw3 0 -> 10
route M Sw3 1 -> 10
route M Sw4 0 -> 10
route A Sw1 3 -> 10
route A Sw2 0 -> 10
route A Sw3 0 -> 11
)";

inline std::optional<Scenario> builtin_scenario(const std::string& name) {
  const char* text = nullptr;
  if (name == "example1") text = kExample1Text;
  else if (name == "example2") text = kExample2Text;
  if (!text) return std::nullopt;
  auto res = parse_scenario(text);
  if (!res.ok()) throw std::logic_error("builtin scenario " + name + " failed to parse");
  return std::move(res.scenario);
}

enum class MergeAlgorithm { Turnaround, BitMark };
enum class MergeMode { VcMerge, VpMerge };

inline const char* merge_algorithm_name(MergeAlgorithm a) {
  return a == MergeAlgorithm::Turnaround ? "turnaround" : "bitmark";
}
inline const char* merge_mode_name(MergeMode m) { return m == MergeMode::VcMerge ? "vc" : "vp"; }

/// Simulation knobs, filled from scenario `param` lines with conventional
/// defaults; CLI flags override.
struct SimParams {
  Rational pcr{150};
  Rational icr{5};  // PCR/30
  int nrm = 32;
  int packet_cells = 10;
  std::int64_t duration_ms = 500;
  std::int64_t interval_us = 1000;
  std::int64_t link_delay_ns = 1000;  // 1 us per link
  Rational utilization{19, 20};       // 95% target
  MergeAlgorithm merge_alg = MergeAlgorithm::Turnaround;
  MergeMode merge_mode = MergeMode::VpMerge;
  std::int64_t queue_limit_cells = 0;  // 0 = unbounded
  bool mer_min_update = false;         // experimental min-variant of the MER update
  std::uint64_t seed = 42;
};

inline std::optional<std::string> apply_params(const std::map<std::string, std::string>& params,
                                               SimParams& out) {
  for (const auto& [k, v] : params) {
    auto want_rational = [&](Rational& dst) -> bool { return Rational::parse(v, dst); };
    bool ok = true;
    if (k == "pcr") ok = want_rational(out.pcr);
    else if (k == "icr") ok = want_rational(out.icr);
    else if (k == "utilization") ok = want_rational(out.utilization);
    else if (k == "nrm") { try { out.nrm = std::stoi(v); } catch (...) { ok = false; } }
    else if (k == "packet_cells") { try { out.packet_cells = std::stoi(v); } catch (...) { ok = false; } }
    else if (k == "duration_ms") { try { out.duration_ms = std::stoll(v); } catch (...) { ok = false; } }
    else if (k == "interval_ms") {
      Rational r;
      ok = Rational::parse(v, r) && !r.is_negative();
      if (ok) out.interval_us = (Rational(1000) * r).num() / (Rational(1000) * r).den();
    } else if (k == "link_delay_us") { try { out.link_delay_ns = std::stoll(v) * 1000; } catch (...) { ok = false; } }
    else if (k == "queue_limit") { try { out.queue_limit_cells = std::stoll(v); } catch (...) { ok = false; } }
    else if (k == "seed") { try { out.seed = std::stoull(v); } catch (...) { ok = false; } }
    else if (k == "merge_alg") {
      if (v == "turnaround") out.merge_alg = MergeAlgorithm::Turnaround;
      else if (v == "bitmark") out.merge_alg = MergeAlgorithm::BitMark;
      else ok = false;
    } else if (k == "merge_mode") {
      if (v == "vc") out.merge_mode = MergeMode::VcMerge;
      else if (v == "vp") out.merge_mode = MergeMode::VpMerge;
      else ok = false;
    } else if (k == "mer_min_update") {
      if (v == "on") out.mer_min_update = true;
      else if (v == "off") out.mer_min_update = false;
      else ok = false;
    } else {
      return "unknown param " + k;
    }
    if (!ok) return "bad value for param " + k + ": " + v;
  }
  if (!(out.pcr > Rational(0)) || !(out.icr > Rational(0)) || out.icr > out.pcr)
    return "source rates must satisfy 0 < icr <= pcr";
  if (out.nrm < 2) return "nrm must be >= 2";
  if (out.interval_us <= 0) return "interval must be positive";
  return std::nullopt;
}

}  // namespace mpfair
