// End-to-end checks of the mpfair binary: flags, output, exit codes.
// The binary path arrives in MPFAIR_BIN, scenario files in MPFAIR_SCENARIOS.

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>

namespace {

int failures = 0;

struct RunResult {
  int code = -1;
  std::string out;
};

RunResult run(const std::string& args) {
  const char* bin = std::getenv("MPFAIR_BIN");
  if (!bin) {
    std::cerr << "MPFAIR_BIN not set\n";
    std::exit(2);
  }
  std::string cmd = std::string(bin) + " " + args + " 2>&1";
  RunResult r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  std::array<char, 4096> buf;
  size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), p)) > 0) r.out.append(buf.data(), n);
  int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

void expect(bool cond, const std::string& what) {
  if (cond) {
    std::printf("ok: %s\n", what.c_str());
  } else {
    std::printf("FAIL: %s\n", what.c_str());
    ++failures;
  }
}

bool contains(const std::string& hay, const std::string& needle) {
  return hay.find(needle) != std::string::npos;
}

}  // namespace

int main() {
  auto r = run("allocate --scenario builtin:example1 --policy vc-flow");
  expect(r.code == 0, "allocate vc-flow exits 0");
  expect(contains(r.out, "18.75") && contains(r.out, "37.50") && contains(r.out, "75.00"),
         "allocate vc-flow prints the reference decimals");

  r = run("allocate --scenario builtin:example2 --policy vc-source");
  expect(r.code == 0, "allocate vc-source exits 0");
  expect(contains(r.out, "12.50") && contains(r.out, "62.50") && contains(r.out, "25.00"),
         "allocate vc-source prints the reference decimals");

  r = run("allocate --scenario builtin:example1 --policy bogus");
  expect(r.code == 1, "unknown policy is a usage error (exit 1)");

  r = run("allocate --no-such-flag");
  expect(r.code == 1, "unknown flag is a usage error (exit 1)");

  r = run("allocate --scenario builtin:nowhere --policy source");
  expect(r.code == 1, "unknown builtin scenario exits 1");

  r = run("flows --scenario builtin:example1");
  expect(r.code == 0 && contains(r.out, "LINK3") && contains(r.out, "3"),
         "flows reports three flows on LINK3");

  r = run("compare --scenario builtin:example1 --format csv");
  expect(r.code == 0 && contains(r.out, "source,S1,vc-flow,75/4"),
         "compare csv carries exact fractions");

  // determinism: identical invocations produce identical bytes
  auto r2 = run("compare --scenario builtin:example1 --format csv");
  expect(r.out == r2.out, "identical invocations produce identical bytes");

  // scenario files from the repository parse
  if (const char* dir = std::getenv("MPFAIR_SCENARIOS")) {
    r = run("allocate --scenario " + std::string(dir) + "/example2.scn --policy flow --format csv");
    expect(r.code == 0 && contains(r.out, "125/3"), "scenario file allocates like the builtin");
    r = run("allocate --scenario " + std::string(dir) + "/missing.scn --policy flow");
    expect(r.code == 1, "missing scenario file exits 1");
  }

  // verify: accept the tool's own allocation, reject a corrupted one
  std::string alloc_path = "/tmp/mpfair_alloc_test.csv";
  r = run("allocate --scenario builtin:example1 --policy source --format csv --out " + alloc_path);
  expect(r.code == 0, "allocate writes a csv allocation file");
  r = run("verify --scenario builtin:example1 --policy source --alloc " + alloc_path);
  expect(r.code == 0 && contains(r.out, "ok"), "verify accepts the computed allocation");
  {
    std::ofstream f(alloc_path, std::ios::app);
    f << "S1,40\n";  // overrides the correct rate, overloads LINK3
  }
  r = run("verify --scenario builtin:example1 --policy source --alloc " + alloc_path);
  expect(r.code == 2 && contains(r.out, "LINK3"), "verify names the overloaded link and exits 2");

  r = run("simulate --scenario builtin:example1 --policy source --merge-alg turnaround "
          "--duration-ms 60 --trace /tmp/mpfair_trace_test.csv");
  expect(r.code == 0, "simulate converges and exits 0");
  expect(contains(r.out, "conservation ok"), "simulate reports merge conservation");
  {
    std::ifstream t("/tmp/mpfair_trace_test.csv");
    std::string header;
    std::getline(t, header);
    expect(header == "time_us,entity_kind,entity_id,metric,value",
           "trace csv carries the documented header");
  }

  r = run("simulate --scenario builtin:example1 --policy source --duration-ms 0");
  expect(r.code == 3, "zero-duration simulation exits 3 (no steady state)");

  r = run("simulate --scenario builtin:example1 --merge-mode vp --duration-ms 40 "
          "--trace /tmp/mpfair_trace_vp.csv");
  expect(r.code == 0, "vp-merge simulation exits 0");
  {
    std::ifstream t("/tmp/mpfair_trace_vp.csv");
    std::string all((std::istreambuf_iterator<char>(t)), std::istreambuf_iterator<char>());
    expect(contains(all, "source_rate_mbps:"), "vp trace reports per-source switch rates");
  }

  r = run("probe-depth --levels 1,2 --duration-ms 60");
  expect(r.code == 0 && contains(r.out, "depth,algorithm,feedback_delay_us,rm_rtt_us") &&
             contains(r.out, "turnaround") && contains(r.out, "bitmark"),
         "probe-depth emits csv for both algorithms");

  std::printf("%s\n", failures == 0 ? "cli tests passed" : "CLI FAILURES PRESENT");
  return failures == 0 ? 0 : 1;
}
