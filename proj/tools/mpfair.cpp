// mpfair: max-min fair allocation and ABR feedback simulation for
// multipoint-to-point connections.
//
// Exit codes: 0 success, 1 input error, 2 verification failure,
// 3 non-convergence.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "mpfair/report.hpp"
#include "mpfair/scenario.hpp"
#include "mpfair/sim/simulator.hpp"
#include "mpfair/topology.hpp"
#include "mpfair/waterfill.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kVerifyError = 2;
constexpr int kNoConvergence = 3;

struct Common {
  std::string scenario = "builtin:example1";
  std::string format = "table";
  std::string out = "stdout";
  std::uint64_t seed = 42;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--scenario", c.scenario, "scenario file path or builtin:<name>");
  cmd->add_option("--format", c.format, "table | csv | json-lines");
  cmd->add_option("--out", c.out, "output path or 'stdout'");
  cmd->add_option("--seed", c.seed, "seed for randomized runs (fixed default)");
}

int write_out(const Common& c, const std::string& text) {
  if (c.out == "stdout" || c.out == "-") {
    std::cout << text;
    return kOk;
  }
  std::ofstream f(c.out);
  if (!f) {
    std::cerr << "cannot write " << c.out << "\n";
    return kInputError;
  }
  f << text;
  return kOk;
}

// Loads and validates the scenario; on failure prints errors and returns
// nullopt.
std::optional<std::pair<mpfair::Scenario, mpfair::Network>> load(const Common& c) {
  mpfair::Scenario sc;
  if (c.scenario.rfind("builtin:", 0) == 0) {
    auto b = mpfair::builtin_scenario(c.scenario.substr(8));
    if (!b) {
      std::cerr << "unknown builtin scenario " << c.scenario << "\n";
      return std::nullopt;
    }
    sc = std::move(*b);
  } else {
    std::ifstream f(c.scenario);
    if (!f) {
      std::cerr << "cannot read " << c.scenario << "\n";
      return std::nullopt;
    }
    std::stringstream buf;
    buf << f.rdbuf();
    auto pr = mpfair::parse_scenario(buf.str());
    if (!pr.ok()) {
      for (const auto& e : pr.errors) std::cerr << c.scenario << ":" << e.str() << "\n";
      return std::nullopt;
    }
    sc = std::move(*pr.scenario);
  }
  auto vr = sc.validate();
  if (!vr.ok()) {
    for (const auto& e : vr.errors) std::cerr << e.message << "\n";
    return std::nullopt;
  }
  return std::make_pair(std::move(sc), std::move(*vr.network));
}

std::optional<mpfair::OutputFormat> format_of(const Common& c) {
  auto f = mpfair::parse_format(c.format);
  if (!f) std::cerr << "unknown format " << c.format << "\n";
  return f;
}

mpfair::SimParams sim_params_of(const mpfair::Scenario& sc, const Common& c, int* rc) {
  mpfair::SimParams p;
  p.seed = c.seed;
  if (auto err = mpfair::apply_params(sc.params, p)) {
    std::cerr << *err << "\n";
    *rc = kInputError;
  }
  return p;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"max-min fairness for multipoint-to-point connections"};
  app.require_subcommand(1);

  Common c;
  std::string policy = "source";
  std::string merge_alg = "turnaround";
  std::string merge_mode = "vp";
  std::string alloc_file;
  std::string trace_file;
  std::string levels = "1,2,4,8";
  std::string utilization;
  std::int64_t duration_ms = -1;

  auto* cmd_allocate = app.add_subcommand("allocate", "water-fill one fairness policy");
  add_common(cmd_allocate, c);
  cmd_allocate->add_option("--policy", policy, "source | vc-source | flow | vc-flow");

  auto* cmd_compare = app.add_subcommand("compare", "all four policies side by side");
  add_common(cmd_compare, c);

  auto* cmd_flows = app.add_subcommand("flows", "flow counts per link");
  add_common(cmd_flows, c);

  auto* cmd_simulate = app.add_subcommand("simulate", "run the ABR feedback simulation");
  add_common(cmd_simulate, c);
  cmd_simulate->add_option("--policy", policy, "policy whose allocation the summary compares against");
  cmd_simulate->add_option("--merge-alg", merge_alg, "turnaround | bitmark");
  cmd_simulate->add_option("--merge-mode", merge_mode, "vc | vp");
  cmd_simulate->add_option("--duration-ms", duration_ms, "simulated milliseconds");
  cmd_simulate->add_option("--utilization", utilization, "target utilization (e.g. 19/20)");
  cmd_simulate->add_option("--trace", trace_file, "write the event trace CSV here");

  auto* cmd_verify = app.add_subcommand("verify", "check an allocation file");
  add_common(cmd_verify, c);
  cmd_verify->add_option("--policy", policy, "source | vc-source | flow | vc-flow");
  cmd_verify->add_option("--alloc", alloc_file, "allocation csv (source,rate)")->required();

  auto* cmd_probe = app.add_subcommand("probe-depth", "feedback delay vs merge depth");
  add_common(cmd_probe, c);
  cmd_probe->add_option("--levels", levels, "comma-separated merge depths");
  cmd_probe->add_option("--duration-ms", duration_ms, "simulated milliseconds per run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kOk : kInputError;
  }

  try {
    auto pol = mpfair::parse_policy(policy);
    if (!pol) {
      std::cerr << "unknown policy " << policy << "\n";
      return kInputError;
    }
    auto fmt = format_of(c);
    if (!fmt) return kInputError;

    if (cmd_probe->parsed()) {
      std::vector<int> depths;
      std::string cur;
      for (char ch : levels + ",") {
        if (ch == ',') {
          if (!cur.empty()) depths.push_back(std::stoi(cur));
          cur.clear();
        } else cur += ch;
      }
      if (depths.empty()) {
        std::cerr << "no depths given\n";
        return kInputError;
      }
      mpfair::SimParams p;
      p.seed = c.seed;
      p.duration_ms = duration_ms > 0 ? duration_ms : 200;
      auto rows = mpfair::sim::feedback_delay_probe(depths, p);
      return write_out(c, mpfair::sim::probe_csv(rows));
    }

    auto loaded = load(c);
    if (!loaded) return kInputError;
    const mpfair::Scenario& sc = loaded->first;
    const mpfair::Network& net = loaded->second;

    if (cmd_allocate->parsed()) {
      auto wf = mpfair::water_fill(net, *pol);
      auto rep = mpfair::verify_maxmin(net, *pol, wf.alloc, wf.certs);
      if (!rep.ok) {
        std::cerr << "internal verification failed: " << rep.first() << "\n";
        return kVerifyError;
      }
      return write_out(c, mpfair::emit_allocation(net, *pol, wf.alloc, *fmt));
    }

    if (cmd_compare->parsed()) {
      auto cmp = mpfair::compare_policies(net);
      return write_out(c, mpfair::emit_comparison(net, cmp, *fmt));
    }

    if (cmd_flows->parsed()) return write_out(c, mpfair::emit_flows(net, *fmt));

    if (cmd_verify->parsed()) {
      std::ifstream f(alloc_file);
      if (!f) {
        std::cerr << "cannot read " << alloc_file << "\n";
        return kInputError;
      }
      std::stringstream buf;
      buf << f.rdbuf();
      std::string err;
      auto alloc = mpfair::parse_allocation_csv(buf.str(), err);
      if (!alloc) {
        std::cerr << alloc_file << ": " << err << "\n";
        return kInputError;
      }
      auto rep = mpfair::verify_against_recompute(net, *pol, *alloc);
      std::ostringstream os;
      if (rep.ok) {
        os << "ok: allocation is the " << mpfair::policy_name(*pol) << " max-min allocation\n";
        write_out(c, os.str());
        return kOk;
      }
      for (const auto& v : rep.violations) os << "violation: " << v << "\n";
      write_out(c, os.str());
      return kVerifyError;
    }

    if (cmd_simulate->parsed()) {
      int rc = kOk;
      mpfair::SimParams p = sim_params_of(sc, c, &rc);
      if (rc != kOk) return rc;
      if (merge_alg == "turnaround") p.merge_alg = mpfair::MergeAlgorithm::Turnaround;
      else if (merge_alg == "bitmark") p.merge_alg = mpfair::MergeAlgorithm::BitMark;
      else {
        std::cerr << "unknown merge algorithm " << merge_alg << "\n";
        return kInputError;
      }
      if (merge_mode == "vc") p.merge_mode = mpfair::MergeMode::VcMerge;
      else if (merge_mode == "vp") p.merge_mode = mpfair::MergeMode::VpMerge;
      else {
        std::cerr << "unknown merge mode " << merge_mode << "\n";
        return kInputError;
      }
      if (duration_ms >= 0) p.duration_ms = duration_ms;
      if (!utilization.empty() && !mpfair::Rational::parse(utilization, p.utilization)) {
        std::cerr << "bad utilization " << utilization << "\n";
        return kInputError;
      }

      auto res = mpfair::sim::run_simulation(net, p);
      if (!trace_file.empty()) {
        std::ofstream tf(trace_file);
        if (!tf) {
          std::cerr << "cannot write " << trace_file << "\n";
          return kInputError;
        }
        tf << res.trace_csv;
      }

      auto wf = mpfair::water_fill(net, *pol);
      double util = p.utilization.to_double();
      std::ostringstream os;
      os << "simulate: policy=" << mpfair::policy_name(*pol)
         << " merge_alg=" << mpfair::merge_algorithm_name(p.merge_alg)
         << " merge_mode=" << mpfair::merge_mode_name(p.merge_mode)
         << " duration_ms=" << p.duration_ms << " utilization=" << p.utilization.str() << "\n";
      os << "source  steady_mbps  normalized_mbps  expected_mbps  rel_err  oscillation\n";
      for (const auto& s : res.sources) {
        double normalized = util > 0 ? s.mean_acr_mbps / util : 0;
        double expect = wf.alloc.at(s.id).to_double();
        double rel = expect > 0 ? (normalized - expect) / expect : 0;
        char line[256];
        std::snprintf(line, sizeof line, "%-7s %-12.3f %-16.3f %-14.3f %-+8.4f %.4f\n",
                      s.id.c_str(), s.mean_acr_mbps, normalized, expect, rel, s.oscillation);
        os << line;
      }
      if (p.merge_mode == mpfair::MergeMode::VpMerge)
        os << "per-source switch rates: see source_rate_mbps rows in the trace\n";
      if (res.dropped_cells > 0) os << "dropped cells: " << res.dropped_cells << "\n";
      for (const auto& m : res.merge_points) {
        auto rep = mpfair::sim::conservation_check(res, m.sw, m.vc, p);
        os << "merge " << m.sw << ":" << m.vc << " conservation "
           << (rep.ok() ? "ok" : "VIOLATED") << " (" << rep.detail << ")\n";
      }
      write_out(c, os.str());
      if (!res.converged()) {
        std::cerr << "non-convergence: no steady state reached\n";
        return kNoConvergence;
      }
      return kOk;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  return kInputError;
}
