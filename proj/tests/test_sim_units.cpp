#include <random>

#include "doctest.h"
#include "mpfair/sim/merge_point.hpp"
#include "mpfair/sim/merge_queue.hpp"

using namespace mpfair;
using namespace mpfair::sim;

TEST_CASE("source ACR follows min(PCR, ER) with the ICR floor") {
  Rational pcr(150), icr(5);
  CHECK(acr_on_brm(Rational(75, 2), pcr, icr) == Rational(75, 2));
  CHECK(acr_on_brm(Rational(200), pcr, icr) == Rational(150));  // PCR clamp
  CHECK(acr_on_brm(Rational(10), pcr, icr) == Rational(10));    // fixed point
  CHECK(acr_on_brm(Rational(1), pcr, icr) == Rational(5));      // ICR floor
}

TEST_CASE("turnaround merge point answers FRMs from MER and re-arms it") {
  MergePointState mp(MergeAlgorithm::Turnaround, MergeMode::VpMerge, Rational(150), {0, 1});
  CHECK(mp.on_brm(Rational(75, 2), 100).empty());  // BRM consumed, nothing forwarded
  CHECK(mp.mer() == Rational(75, 2));

  auto acts = mp.on_frm(0, 500, Rational(150));
  REQUIRE(acts.size() == 1);
  CHECK(acts[0].branch == 0);
  CHECK(acts[0].er == Rational(75, 2));
  CHECK(acts[0].info_birth == 100);
  CHECK(acts[0].trigger == 500);
  CHECK(mp.mer() == Rational(150));  // reset to the peak cell rate
}

TEST_CASE("turnaround read racing the refill is capped by the downstream estimate") {
  MergePointState mp(MergeAlgorithm::Turnaround, MergeMode::VpMerge, Rational(150), {0, 1});
  mp.on_brm(Rational(25), 10);
  mp.on_frm(0, 20, Rational(150));  // consumes MER, resets it to PCR
  auto acts = mp.on_frm(1, 30, Rational(150));
  REQUIRE(acts.size() == 1);
  CHECK(acts[0].er == Rational(25));  // estimate caps the reset value
}

TEST_CASE("turnaround merge honors the local link share") {
  MergePointState mp(MergeAlgorithm::Turnaround, MergeMode::VpMerge, Rational(150), {0, 1});
  auto acts = mp.on_frm(0, 0, Rational(60));
  REQUIRE(acts.size() == 1);
  CHECK(acts[0].er == Rational(60));  // min(MER=150, local 60)
}

TEST_CASE("bitmark merge point sets bits and never originates BRMs") {
  MergePointState mp(MergeAlgorithm::BitMark, MergeMode::VpMerge, Rational(150), {1, 2, 3});
  CHECK(mp.on_frm(1, 100, Rational(150)).empty());
  CHECK(mp.bit_set(1));
  CHECK_FALSE(mp.bit_set(2));
  // a second FRM from the same branch is idempotent
  CHECK(mp.on_frm(1, 200, Rational(150)).empty());
  CHECK(mp.bit_set(1));
  CHECK(mp.on_frm(3, 300, Rational(150)).empty());

  auto acts = mp.on_brm(Rational(25), 400);
  REQUIRE(acts.size() == 2);  // duplicated to the marked branches only
  CHECK(acts[0].branch == 1);
  CHECK(acts[0].er == Rational(25));
  CHECK(acts[0].trigger == 100);  // the first FRM armed the bit
  CHECK(acts[1].branch == 3);
  CHECK_FALSE(mp.bit_set(1));
  CHECK_FALSE(mp.bit_set(3));
}

TEST_CASE("bitmark BRM with no bits set is consumed silently") {
  MergePointState mp(MergeAlgorithm::BitMark, MergeMode::VpMerge, Rational(150), {0, 1});
  CHECK(mp.on_brm(Rational(40), 0).empty());
}

TEST_CASE("vc merge divides the propagated rate among branches") {
  MergePointState turn(MergeAlgorithm::Turnaround, MergeMode::VcMerge, Rational(150), {0, 1});
  turn.on_brm(Rational(75), 0);
  auto acts = turn.on_frm(0, 0, Rational(150));
  REQUIRE(acts.size() == 1);
  CHECK(acts[0].er == Rational(75, 2));

  MergePointState bm(MergeAlgorithm::BitMark, MergeMode::VcMerge, Rational(150), {0, 1});
  bm.on_frm(0, 0, Rational(150));
  bm.on_frm(1, 0, Rational(150));
  auto copies = bm.on_brm(Rational(75), 0);
  REQUIRE(copies.size() == 2);
  CHECK(copies[0].er == Rational(75, 2));
}

namespace {

Cell data_cell(int origin, bool eom) {
  Cell c;
  c.kind = Cell::Kind::Data;
  c.vc = 0;
  c.origin = origin;
  c.eom = eom;
  return c;
}

}  // namespace

TEST_CASE("cut-through forwards whole packets and round-robins at EOM") {
  CutThroughQueue q;
  // A brings a 3-cell packet, B a 2-cell packet, arrivals interleaved
  q.enqueue(0, data_cell(0, false));
  q.enqueue(1, data_cell(1, false));
  q.enqueue(0, data_cell(0, false));
  q.enqueue(1, data_cell(1, true));
  q.enqueue(0, data_cell(0, true));
  std::string order;
  while (auto c = q.dequeue()) order += c->origin == 0 ? 'A' : 'B';
  CHECK(order == "AAABB");
}

TEST_CASE("single flow passes through in order") {
  CutThroughQueue q;
  for (int i = 0; i < 5; ++i) q.enqueue(2, data_cell(2, i == 4));
  int n = 0;
  while (auto c = q.dequeue()) {
    CHECK(c->origin == 2);
    ++n;
  }
  CHECK(n == 5);
}

TEST_CASE("mid-packet starvation blocks the output until the packet completes") {
  CutThroughQueue q;
  q.enqueue(0, data_cell(0, false));  // packet started, EOM not yet here
  q.enqueue(1, data_cell(1, true));   // a complete packet on the other branch
  REQUIRE(q.dequeue().has_value());
  CHECK_FALSE(q.dequeue().has_value());  // must not interleave branch 1
  q.enqueue(0, data_cell(0, true));
  auto c = q.dequeue();
  REQUIRE(c.has_value());
  CHECK(c->origin == 0);
  CHECK(c->eom);
  c = q.dequeue();
  REQUIRE(c.has_value());
  CHECK(c->origin == 1);
}

TEST_CASE("randomized three-flow stress never interleaves a packet") {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> pick_flow(0, 2);
  std::uniform_int_distribution<int> pick_len(1, 12);
  std::uniform_int_distribution<int> burst(1, 6);

  CutThroughQueue q;
  std::array<int, 3> remaining{0, 0, 0};
  const int kPackets = 10000;
  int started = 0, drained = 0;

  int scan_origin = -1;
  bool mid = false;
  std::int64_t violations = 0;
  auto drain_some = [&](int count) {
    for (int i = 0; i < count; ++i) {
      auto c = q.dequeue();
      if (!c) break;
      ++drained;
      if (!mid) {
        scan_origin = c->origin;
        mid = true;
      } else if (c->origin != scan_origin) {
        ++violations;
      }
      if (c->eom) mid = false;
    }
  };

  while (started < kPackets) {
    int f = pick_flow(rng);
    if (remaining[f] == 0) {
      remaining[f] = pick_len(rng);
      ++started;
    }
    int cells = std::min(burst(rng), remaining[f]);
    for (int i = 0; i < cells; ++i) {
      --remaining[f];
      q.enqueue(f, data_cell(f, remaining[f] == 0));
    }
    drain_some(burst(rng));
  }
  // finish open packets so the queue can fully drain
  for (int f = 0; f < 3; ++f)
    while (remaining[f] > 0) {
      --remaining[f];
      q.enqueue(f, data_cell(f, remaining[f] == 0));
    }
  drain_some(1 << 20);
  CHECK(violations == 0);
  CHECK(q.buffered() == 0);
  CHECK(drained > kPackets);
}
