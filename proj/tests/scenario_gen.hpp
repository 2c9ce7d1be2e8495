#pragma once

#include <random>
#include <string>

#include "mpfair/scenario.hpp"
#include "mpfair/topology.hpp"

namespace testgen {

// Random chain topologies in the style of the worked configurations: switches
// Sw1..Swn in a line, VCs entering at arbitrary switches and leaving at a
// random destination switch further down. Access links occasionally get small
// capacities so some sources bottleneck away from the trunk.
inline mpfair::Scenario random_chain_scenario(std::mt19937_64& rng, bool multipoint,
                                              int max_switches = 6, int max_vcs = 4,
                                              int max_sources = 10) {
  using namespace mpfair;
  std::uniform_int_distribution<int> sw_count(2, max_switches);
  const int n = sw_count(rng);

  Scenario sc;
  auto swname = [](int i) { return "Sw" + std::to_string(i); };
  for (int i = 1; i <= n; ++i) sc.switches.push_back(swname(i));

  std::uniform_int_distribution<int> trunk_cap(30, 160);
  for (int i = 1; i < n; ++i)
    sc.links.push_back(Link{"T" + std::to_string(i), Endpoint::switch_port(swname(i), 10),
                            Endpoint::switch_port(swname(i + 1), 0),
                            Rational(trunk_cap(rng))});

  std::vector<int> next_port(n + 1, 20);
  std::uniform_int_distribution<int> vc_count(1, max_vcs);
  std::uniform_int_distribution<int> src_count(1, 3);
  std::uniform_int_distribution<int> coin(0, 9);
  std::uniform_int_distribution<int> small_cap(8, 40);

  int vcs = std::max(1, vc_count(rng));
  int total_sources = 0;
  for (int v = 1; v <= vcs; ++v) {
    VirtualConnection vc;
    vc.id = "V" + std::to_string(v);
    vc.dest = "D" + std::to_string(v);
    std::uniform_int_distribution<int> dest_sw(1, n);
    int d = dest_sw(rng);

    int want = multipoint ? src_count(rng) : 1;
    if (total_sources + want > max_sources) want = max_sources - total_sources;
    if (want <= 0) break;
    for (int s = 0; s < want; ++s) {
      std::uniform_int_distribution<int> entry_sw(1, d);
      int e = entry_sw(rng);
      std::string sid = "S" + std::to_string(v) + "_" + std::to_string(s);
      int port = next_port[e]++;
      Rational cap = coin(rng) < 3 ? Rational(small_cap(rng)) : Rational(150);
      sc.links.push_back(Link{"A" + sid, Endpoint::source(sid),
                              Endpoint::switch_port(swname(e), port), cap});
      vc.sources.push_back(sid);
      vc.route[swname(e)][port] = e == d ? 11 : 10;
      for (int j = e + 1; j <= d; ++j) vc.route[swname(j)][0] = j == d ? 11 : 10;
      ++total_sources;
    }
    // one egress port per (vc, switch): use a fresh output port per vc
    int out_port = next_port[d]++;
    for (auto& [sw, ports] : vc.route)
      for (auto& [in, out] : ports)
        if (sw == swname(d)) out = out_port;
    sc.links.push_back(Link{"AD" + std::to_string(v), Endpoint::switch_port(swname(d), out_port),
                            Endpoint::dest(vc.dest), Rational(150)});
    sc.vcs.push_back(std::move(vc));
    if (total_sources >= max_sources) break;
  }
  return sc;
}

inline mpfair::Network validated(const mpfair::Scenario& sc) {
  auto vr = sc.validate();
  if (!vr.ok()) {
    std::string msg = "generated scenario invalid:";
    for (const auto& e : vr.errors) msg += " " + e.message;
    throw std::logic_error(msg);
  }
  return std::move(*vr.network);
}

}  // namespace testgen
