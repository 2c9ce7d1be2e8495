#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mpfair/scenario.hpp"
#include "mpfair/sim/cell.hpp"
#include "mpfair/sim/merge_point.hpp"
#include "mpfair/sim/merge_queue.hpp"
#include "mpfair/topology.hpp"

namespace mpfair::sim {

struct SourceSummary {
  SourceId id;
  double mean_acr_mbps = 0;
  double min_acr_mbps = 0;
  double max_acr_mbps = 0;
  double oscillation = 1.0;  // (max-min)/mean over the final quarter
  bool converged = false;
  double mean_rm_rtt_us = -1;      // FRM emission -> matching BRM at the leaf
  double mean_info_delay_us = -1;  // root-side rate birth -> arrival at the leaf
};

struct MergePointCounters {
  SwitchId sw;
  VcId vc;
  Rational out_capacity_mbps;
  std::map<int, std::int64_t> frm_in;   // per branch (input port)
  std::map<int, std::int64_t> data_in;  // per branch
  std::map<int, std::int64_t> brm_down;
  std::int64_t frm_fwd = 0;
  std::int64_t data_fwd = 0;  // data cells that left on the output link
};

struct SimResult {
  Time horizon_ns = 0;
  MergeMode merge_mode = MergeMode::VpMerge;
  std::vector<SourceSummary> sources;  // sorted by id
  std::vector<MergePointCounters> merge_points;
  std::map<LinkId, double> mean_load_mbps;  // over the final quarter
  // every entity id a switch meter ever keyed on, per metered link
  std::map<LinkId, std::vector<std::string>> accounting_entities;
  std::int64_t interleave_violations = 0;
  std::int64_t dropped_cells = 0;
  std::string trace_csv;

  bool converged() const {
    if (horizon_ns <= 0 || sources.empty()) return false;
    for (const auto& s : sources)
      if (!s.converged) return false;
    return true;
  }
  const SourceSummary& source(const SourceId& id) const {
    for (const auto& s : sources)
      if (s.id == id) return s;
    throw std::out_of_range("no summary for source " + id);
  }
};

/// Deterministic event-driven simulation of the ABR explicit-rate loop:
/// sources pace cells at ACR and emit an FRM every Nrm cells, switches meter
/// entity rates per output link and advertise a flat max-min level each
/// measurement interval, merge points run the Turnaround or BitMark RM
/// algorithm, destinations turn FRM cells around.
class Simulator {
 public:
  Simulator(const Network& net, const SimParams& params) : net_(net), p_(params) { build(); }

  SimResult run() {
    horizon_ = p_.duration_ms * 1'000'000;
    win_start_ = horizon_ - horizon_ / 4;
    for (int i = 0; i < static_cast<int>(sources_.size()); ++i) {
      record_acr(i, 0, src_[i].acr);
      // small per-source phase offset so deterministic runs do not start in
      // pathological lockstep
      schedule(i * 13'000, Event::Kind::SourceEmit, i, -1, {});
    }
    if (horizon_ > 0) schedule(interval_ns_, Event::Kind::Tick, 0, -1, {});

    while (!heap_.empty()) {
      Event ev = heap_.top();
      if (ev.time > horizon_) break;
      heap_.pop();
      now_ = ev.time;
      dispatch(ev);
    }
    return finalize();
  }

 private:
  struct Event {
    Time time = 0;
    std::uint64_t seq = 0;
    enum class Kind : std::uint8_t { SourceEmit, ArriveSwitch, ArriveSource, ArriveDest, LinkFree, Tick } kind;
    int a = -1;  // node or link index
    int b = -1;  // input port for switch arrivals
    Cell cell;
  };
  struct EventOrder {
    bool operator()(const Event& x, const Event& y) const {
      if (x.time != y.time) return x.time > y.time;
      return x.seq > y.seq;
    }
  };

  struct SrcState {
    int vc = -1;
    int access_link = -1;
    Rational acr, pcr_eff;
    std::int64_t cells_sent = 0;
    int packet_pos = 0;
    std::vector<std::pair<Time, Rational>> history;
    double rtt_sum = 0, info_sum = 0;
    std::int64_t rtt_n = 0, info_n = 0;
  };

  struct VcAtSwitch {
    int out_link = -1;
    std::map<int, int> branch_link;  // input port -> link feeding it
    MergePointState merge;           // active when is_merge()
    std::map<int, std::int64_t> frm_in, data_in, brm_down;
    std::int64_t frm_fwd = 0, data_fwd = 0;
    bool is_merge() const { return branch_link.size() >= 2; }
  };

  struct SwState {
    SwitchId id;
    std::map<std::pair<int, int>, int> fwd;  // (vc, in port) -> out link
    std::map<int, VcAtSwitch> vcs;
  };

  struct VcQueue {
    bool cut_through = false;
    CutThroughQueue ct;
    std::deque<Cell> fifo;
  };

  struct LinkState {
    enum class UpKind : std::uint8_t { Source, Switch } up = UpKind::Switch;
    enum class DownKind : std::uint8_t { Switch, Dest } down = DownKind::Switch;
    int up_idx = -1, down_idx = -1, down_port = -1;
    Time tx = 0, prop = 0;
    Rational capacity;
    bool busy = false;
    std::deque<Cell> control;
    std::map<int, VcQueue> data;  // by vc index
    int rr_last = -1;
    std::int64_t queued = 0;
    // metering (switch-side links)
    std::map<int, std::int64_t> meter;  // entity index -> cells this interval
    std::set<int> entities_seen;
    std::int64_t cells_tick = 0;
    std::int64_t cells_win = 0;  // departures inside the final quarter
    Rational lambda;
    bool lambda_valid = false;
    // per-vc interleaving scanner state (VC merge only)
    std::map<int, std::pair<int, bool>> scan;  // vc -> (current origin, mid-packet)
  };

  // ---- construction ----------------------------------------------------

  void build() {
    interval_ns_ = p_.interval_us * 1000;
    for (const auto& [s, vi] : net_.vc_of_source) sources_.push_back(s);
    for (int i = 0; i < static_cast<int>(sources_.size()); ++i) src_index_[sources_[i]] = i;
    for (int i = 0; i < static_cast<int>(net_.switches.size()); ++i) sw_index_[net_.switches[i]] = i;

    sw_.resize(net_.switches.size());
    for (size_t i = 0; i < net_.switches.size(); ++i) sw_[i].id = net_.switches[i];

    int dest_count = 0;
    std::map<DestId, int> dest_index;
    for (const auto& [d, at] : net_.dest_attach) dest_index[d] = dest_count++;

    links_.resize(net_.links.size());
    for (size_t i = 0; i < net_.links.size(); ++i) {
      const Link& l = net_.links[i];
      LinkState& L = links_[i];
      L.capacity = l.capacity_mbps;
      L.tx = tx_time(l.capacity_mbps);
      L.prop = p_.link_delay_ns;
      if (l.from.kind == Endpoint::Kind::Source) {
        L.up = LinkState::UpKind::Source;
        L.up_idx = src_index_.at(l.from.id);
      } else {
        L.up = LinkState::UpKind::Switch;
        L.up_idx = sw_index_.at(l.from.id);
      }
      if (l.to.kind == Endpoint::Kind::Dest) {
        L.down = LinkState::DownKind::Dest;
        L.down_idx = dest_index.at(l.to.id);
      } else {
        L.down = LinkState::DownKind::Switch;
        L.down_idx = sw_index_.at(l.to.id);
        L.down_port = l.to.port;
      }
    }

    // switch forwarding and merge structure, derived from real source paths
    for (const auto& [sid, vi] : net_.vc_of_source) {
      const auto& path = net_.paths.at(sid);
      for (size_t i = 0; i + 1 < path.size(); ++i) {
        const Link& in = net_.links[path[i]];
        int wi = sw_index_.at(in.to.id);
        int q = in.to.port;
        sw_[wi].fwd[{vi, q}] = path[i + 1];
        auto& va = sw_[wi].vcs[vi];
        va.out_link = path[i + 1];
        va.branch_link[q] = path[i];
      }
    }

    src_.resize(sources_.size());
    for (int i = 0; i < static_cast<int>(sources_.size()); ++i) {
      SrcState& s = src_[i];
      s.vc = net_.vc_of_source.at(sources_[i]);
      s.access_link = net_.paths.at(sources_[i]).front();
      Rational line = links_[s.access_link].capacity * p_.utilization;
      s.pcr_eff = line < p_.pcr ? line : p_.pcr;
      s.acr = p_.icr < s.pcr_eff ? p_.icr : s.pcr_eff;
    }

    for (auto& w : sw_)
      for (auto& [vi, va] : w.vcs) {
        if (!va.is_merge()) continue;
        std::vector<int> branches;
        for (const auto& [q, l] : va.branch_link) branches.push_back(q);
        va.merge = MergePointState(p_.merge_alg, p_.merge_mode, p_.pcr, branches,
                                   p_.mer_min_update);
      }
  }

  static Time tx_time(const Rational& mbps) {
    // kCellBits bits at `mbps` Mbit/s, in nanoseconds
    __int128 ns = static_cast<__int128>(kCellBits) * 1000 * mbps.den() / mbps.num();
    return ns < 1 ? 1 : static_cast<Time>(ns);
  }

  Time emit_interval(const Rational& mbps) const {
    if (mbps.num() <= 0) return interval_ns_;
    __int128 ns = static_cast<__int128>(kCellBits) * 1000 * mbps.den() / mbps.num();
    return ns < 1 ? 1 : static_cast<Time>(ns);
  }

  // ---- event plumbing ---------------------------------------------------

  void schedule(Time t, Event::Kind k, int a, int b, Cell cell) {
    Event ev;
    ev.time = t;
    ev.seq = seq_++;
    ev.kind = k;
    ev.a = a;
    ev.b = b;
    ev.cell = std::move(cell);
    heap_.push(std::move(ev));
  }

  void dispatch(const Event& ev) {
    switch (ev.kind) {
      case Event::Kind::SourceEmit: on_source_emit(ev.a); break;
      case Event::Kind::ArriveSwitch:
        if (ev.cell.kind == Cell::Kind::Brm) on_switch_brm(ev.a, ev.cell);
        else on_switch_forward(ev.a, ev.b, ev.cell);
        break;
      case Event::Kind::ArriveSource: on_source_brm(ev.a, ev.cell); break;
      case Event::Kind::ArriveDest: on_dest(ev.a, ev.cell); break;
      case Event::Kind::LinkFree:
        links_[ev.a].busy = false;
        try_serve(ev.a);
        break;
      case Event::Kind::Tick: on_tick(); break;
    }
  }

  // ---- source ----------------------------------------------------------

  void on_source_emit(int si) {
    SrcState& s = src_[si];
    Cell c;
    c.vc = s.vc;
    c.origin = si;
    c.emitted_at = now_;
    if (s.cells_sent % p_.nrm == 0) {
      c.kind = Cell::Kind::Frm;
      c.er = p_.pcr;  // initialized to no more than the peak cell rate
      c.ccr = s.acr;
      c.trigger = now_;
    } else {
      c.kind = Cell::Kind::Data;
      c.eom = (s.packet_pos == p_.packet_cells - 1);
      s.packet_pos = (s.packet_pos + 1) % p_.packet_cells;
    }
    ++s.cells_sent;
    enqueue(s.access_link, -1, c);
    schedule(now_ + emit_interval(s.acr), Event::Kind::SourceEmit, si, -1, {});
  }

  void on_source_brm(int si, const Cell& cell) {
    SrcState& s = src_[si];
    Rational target = acr_on_brm(cell.er, s.pcr_eff, p_.icr);
    if (target != s.acr) {
      s.acr = target;
      record_acr(si, now_, s.acr);
    }
    if (now_ * 2 >= horizon_) {
      if (cell.trigger >= 0) {
        s.rtt_sum += static_cast<double>(now_ - cell.trigger) / 1000.0;
        ++s.rtt_n;
      }
      if (cell.info_birth >= 0) {
        s.info_sum += static_cast<double>(now_ - cell.info_birth) / 1000.0;
        ++s.info_n;
      }
    }
  }

  void record_acr(int si, Time t, const Rational& v) {
    src_[si].history.emplace_back(t, v);
    trace_ << time_us(t) << ",source," << sources_[si] << ",acr_mbps," << v.fixed(4) << "\n";
  }

  // ---- switch: forward cells --------------------------------------------

  void on_switch_forward(int wi, int q, const Cell& cell) {
    SwState& w = sw_[wi];
    auto fit = w.fwd.find({cell.vc, q});
    if (fit == w.fwd.end()) throw std::logic_error("cell with no route at " + w.id);
    int out = fit->second;
    VcAtSwitch& va = w.vcs.at(cell.vc);

    // offered-load metering on the output link; entity granularity is the
    // whole VC under VC merge, the sender under VP merge
    LinkState& L = links_[out];
    int entity = p_.merge_mode == MergeMode::VpMerge ? cell.origin : cell.vc;
    ++L.meter[entity];
    L.entities_seen.insert(entity);
    ++L.cells_tick;

    if (cell.kind == Cell::Kind::Frm) {
      ++va.frm_in[q];
      if (va.is_merge()) {
        for (const auto& act : va.merge.on_frm(q, cell.trigger, lambda_eff(out))) {
          Cell down = cell;
          down.kind = Cell::Kind::Brm;
          down.er = act.er;
          down.info_birth = act.info_birth;
          down.trigger = act.trigger;
          ++va.brm_down[act.branch];
          deliver_down(wi, cell.vc, act.branch, down);
        }
      }
      ++va.frm_fwd;
      enqueue(out, q, cell);
    } else {
      ++va.data_in[q];
      enqueue(out, q, cell);
    }
  }

  // ---- switch: backward cells -------------------------------------------

  void on_switch_brm(int wi, Cell cell) {
    SwState& w = sw_[wi];
    auto vit = w.vcs.find(cell.vc);
    if (vit == w.vcs.end()) throw std::logic_error("BRM with no VC state at " + w.id);
    VcAtSwitch& va = vit->second;

    // reduce the ER to what this switch can support on the forward link
    Rational lam = lambda_eff(va.out_link);
    if (lam < cell.er) cell.er = lam;

    if (va.is_merge()) {
      for (const auto& act : va.merge.on_brm(cell.er, cell.info_birth)) {
        Cell copy = cell;
        copy.er = act.er;
        copy.trigger = act.trigger;
        copy.info_birth = act.info_birth;
        ++va.brm_down[act.branch];
        deliver_down(wi, cell.vc, act.branch, copy);
      }
      return;
    }
    int q = va.branch_link.begin()->first;
    ++va.brm_down[q];
    deliver_down(wi, cell.vc, q, cell);
  }

  // Sends a backward cell one hop down a branch: the feedback channel is
  // delay-only (no queueing modeled on the reverse direction).
  void deliver_down(int wi, int vc, int q, const Cell& cell) {
    int li = sw_[wi].vcs.at(vc).branch_link.at(q);
    const LinkState& L = links_[li];
    Time t = now_ + L.tx + L.prop;
    if (L.up == LinkState::UpKind::Source)
      schedule(t, Event::Kind::ArriveSource, L.up_idx, -1, cell);
    else
      schedule(t, Event::Kind::ArriveSwitch, L.up_idx, -1, cell);
  }

  // ---- destination -------------------------------------------------------

  void on_dest(int di, const Cell& cell) {
    (void)di;
    if (cell.kind != Cell::Kind::Frm) return;
    const VirtualConnection& vc = net_.vcs[cell.vc];
    auto [wsid, port] = net_.dest_attach.at(vc.dest);
    int li = net_.out_link.at({wsid, port});
    Cell brm = cell;
    brm.kind = Cell::Kind::Brm;
    brm.info_birth = now_;
    const LinkState& L = links_[li];
    schedule(now_ + L.tx + L.prop, Event::Kind::ArriveSwitch, sw_index_.at(wsid), -1, brm);
  }

  // ---- link servers -------------------------------------------------------

  void enqueue(int li, int branch, const Cell& cell) {
    LinkState& L = links_[li];
    if (cell.kind == Cell::Kind::Data) {
      if (p_.queue_limit_cells > 0 && L.queued >= p_.queue_limit_cells) {
        ++dropped_;
        return;
      }
      auto [it, fresh] = L.data.try_emplace(cell.vc);
      VcQueue& q = it->second;
      if (fresh) q.cut_through = needs_cut_through(li, cell.vc);
      if (q.cut_through) q.ct.enqueue(branch, cell);
      else q.fifo.push_back(cell);
      ++L.queued;
    } else {
      L.control.push_back(cell);
    }
    try_serve(li);
  }

  bool needs_cut_through(int li, int vc) const {
    if (p_.merge_mode != MergeMode::VcMerge) return false;
    const LinkState& L = links_[li];
    if (L.up != LinkState::UpKind::Switch) return false;
    const auto& vcs = sw_[L.up_idx].vcs;
    auto it = vcs.find(vc);
    return it != vcs.end() && it->second.out_link == li && it->second.is_merge();
  }

  void try_serve(int li) {
    LinkState& L = links_[li];
    if (L.busy) return;
    std::optional<Cell> cell;
    if (!L.control.empty()) {
      cell = L.control.front();
      L.control.pop_front();
    } else if (!L.data.empty()) {
      // round-robin across VC queues; a mid-packet cut-through queue that is
      // starved blocks only its own VC
      auto it = L.data.upper_bound(L.rr_last);
      for (size_t i = 0; i < L.data.size() && !cell; ++i) {
        if (it == L.data.end()) it = L.data.begin();
        VcQueue& q = it->second;
        if (q.cut_through) cell = q.ct.dequeue();
        else if (!q.fifo.empty()) {
          cell = q.fifo.front();
          q.fifo.pop_front();
        }
        if (cell) L.rr_last = it->first;
        else ++it;
      }
      if (cell) --L.queued;
    }
    if (!cell) return;

    if (cell->kind == Cell::Kind::Data) {
      if (L.up == LinkState::UpKind::Switch) {
        ++sw_[L.up_idx].vcs.at(cell->vc).data_fwd;
        if (p_.merge_mode == MergeMode::VcMerge) scan_interleave(L, *cell);
      }
    }
    if (now_ >= win_start_) ++L.cells_win;

    L.busy = true;
    Time done = now_ + L.tx;
    if (L.down == LinkState::DownKind::Dest)
      schedule(done + L.prop, Event::Kind::ArriveDest, L.down_idx, -1, *cell);
    else
      schedule(done + L.prop, Event::Kind::ArriveSwitch, L.down_idx, L.down_port, *cell);
    schedule(done, Event::Kind::LinkFree, li, -1, {});
  }

  void scan_interleave(LinkState& L, const Cell& cell) {
    auto& [cur, mid] = L.scan[cell.vc];
    if (!mid) {
      cur = cell.origin;
      mid = true;
    } else if (cur != cell.origin) {
      ++interleave_violations_;
    }
    if (cell.eom) mid = false;
  }

  // ---- measurement interval ----------------------------------------------

  Rational lambda_eff(int li) const {
    const LinkState& L = links_[li];
    return L.lambda_valid ? L.lambda : L.capacity * p_.utilization;
  }

  void on_tick() {
    for (size_t li = 0; li < links_.size(); ++li) {
      LinkState& L = links_[li];
      if (L.up != LinkState::UpKind::Switch) continue;
      const LinkId& lid = net_.links[li].id;
      if (!L.meter.empty()) {
        std::vector<Rational> rates;
        for (const auto& [entity, cells] : L.meter)
          rates.push_back(Rational(static_cast<std::int64_t>(cells) * kCellBits, p_.interval_us));
        std::sort(rates.begin(), rates.end());
        L.lambda = advertised_level(L.capacity * p_.utilization, rates);
        L.lambda_valid = true;
        for (const auto& [entity, cells] : L.meter) {
          Rational r(static_cast<std::int64_t>(cells) * kCellBits, p_.interval_us);
          const char* kind = p_.merge_mode == MergeMode::VpMerge ? "source_rate_mbps:" : "vc_rate_mbps:";
          trace_ << time_us(now_) << ",switch," << sw_[L.up_idx].id << "," << kind
                 << entity_name(entity) << "," << r.fixed(4) << "\n";
        }
      } else {
        L.lambda_valid = false;
      }
      Rational load(static_cast<std::int64_t>(L.cells_tick) * kCellBits, p_.interval_us);
      trace_ << time_us(now_) << ",link," << lid << ",load_mbps," << load.fixed(4) << "\n";
      L.meter.clear();
      L.cells_tick = 0;
    }
    if (now_ + interval_ns_ <= horizon_) schedule(now_ + interval_ns_, Event::Kind::Tick, 0, -1, {});
  }

  std::string entity_name(int entity) const {
    return p_.merge_mode == MergeMode::VpMerge ? sources_[entity] : net_.vcs[entity].id;
  }

  // Flat max-min level over measured entity rates with budget B: the highest
  // equal share after setting aside the traffic of entities that use less.
  static Rational advertised_level(const Rational& budget, const std::vector<Rational>& ascending) {
    Rational best(0);
    Rational prefix(0);
    const int n = static_cast<int>(ascending.size());
    for (int k = 0; k < n; ++k) {
      Rational level = (budget - prefix) / Rational(n - k);
      if (level > best) best = level;
      prefix += ascending[k];
    }
    return best;
  }

  static std::string time_us(Time t) {
    std::int64_t whole = t / 1000;
    std::int64_t frac = t % 1000;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%lld.%03lld", static_cast<long long>(whole),
                  static_cast<long long>(frac));
    return buf;
  }

  // ---- wrap-up -------------------------------------------------------------

  SimResult finalize() {
    SimResult res;
    res.horizon_ns = horizon_;
    res.merge_mode = p_.merge_mode;
    res.interleave_violations = interleave_violations_;
    res.dropped_cells = dropped_;

    for (int si = 0; si < static_cast<int>(sources_.size()); ++si) {
      SourceSummary sum;
      sum.id = sources_[si];
      const auto& hist = src_[si].history;
      if (horizon_ > 0 && !hist.empty()) {
        const Time t0 = win_start_, t1 = horizon_;
        double area = 0, lo = 0, hi = 0;
        bool any = false;
        for (size_t i = 0; i < hist.size(); ++i) {
          Time seg_start = hist[i].first;
          Time seg_end = i + 1 < hist.size() ? hist[i + 1].first : t1;
          Time s = std::max(seg_start, t0), e = std::min(seg_end, t1);
          if (s >= e) continue;
          double v = hist[i].second.to_double();
          area += v * static_cast<double>(e - s);
          if (!any) { lo = hi = v; any = true; }
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        if (any) {
          sum.mean_acr_mbps = area / static_cast<double>(t1 - t0);
          sum.min_acr_mbps = lo;
          sum.max_acr_mbps = hi;
          sum.oscillation = sum.mean_acr_mbps > 0 ? (hi - lo) / sum.mean_acr_mbps : 1.0;
          sum.converged = sum.oscillation < 0.10;
        }
      }
      if (src_[si].rtt_n > 0) sum.mean_rm_rtt_us = src_[si].rtt_sum / src_[si].rtt_n;
      if (src_[si].info_n > 0) sum.mean_info_delay_us = src_[si].info_sum / src_[si].info_n;
      trace_ << time_us(horizon_) << ",source," << sum.id << ",steady_mbps,"
             << fmt(sum.mean_acr_mbps) << "\n";
      trace_ << time_us(horizon_) << ",source," << sum.id << ",oscillation," << fmt(sum.oscillation)
             << "\n";
      res.sources.push_back(sum);
    }

    for (size_t wi = 0; wi < sw_.size(); ++wi) {
      for (const auto& [vi, va] : sw_[wi].vcs) {
        if (!va.is_merge()) continue;
        MergePointCounters mc;
        mc.sw = sw_[wi].id;
        mc.vc = net_.vcs[vi].id;
        mc.out_capacity_mbps = links_[va.out_link].capacity;
        mc.frm_in = va.frm_in;
        mc.data_in = va.data_in;
        mc.brm_down = va.brm_down;
        mc.frm_fwd = va.frm_fwd;
        mc.data_fwd = va.data_fwd;
        for (const auto& [q, n] : va.frm_in)
          trace_ << time_us(horizon_) << ",merge," << mc.sw << ":" << mc.vc << ",frm_in:" << q
                 << "," << n << "\n";
        trace_ << time_us(horizon_) << ",merge," << mc.sw << ":" << mc.vc << ",frm_fwd,"
               << va.frm_fwd << "\n";
        res.merge_points.push_back(std::move(mc));
      }
    }

    for (size_t li = 0; li < links_.size(); ++li) {
      const LinkState& L = links_[li];
      if (horizon_ > 0) {
        double us = static_cast<double>(horizon_ - win_start_) / 1000.0;
        res.mean_load_mbps[net_.links[li].id] =
            static_cast<double>(L.cells_win) * kCellBits / us;
      }
      if (L.up == LinkState::UpKind::Switch && !L.entities_seen.empty()) {
        auto& names = res.accounting_entities[net_.links[li].id];
        for (int e : L.entities_seen) names.push_back(entity_name(e));
      }
    }

    res.trace_csv = "time_us,entity_kind,entity_id,metric,value\n" + trace_.str();
    return res;
  }

  static std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
  }

  const Network& net_;
  SimParams p_;
  Time horizon_ = 0, win_start_ = 0, now_ = 0, interval_ns_ = 1'000'000;
  std::uint64_t seq_ = 0;
  std::vector<SourceId> sources_;
  std::map<SourceId, int> src_index_;
  std::map<SwitchId, int> sw_index_;
  std::vector<SrcState> src_;
  std::vector<SwState> sw_;
  std::vector<LinkState> links_;
  std::priority_queue<Event, std::vector<Event>, EventOrder> heap_;
  std::ostringstream trace_;
  std::int64_t interleave_violations_ = 0;
  std::int64_t dropped_ = 0;
};

inline SimResult run_simulation(const Network& net, const SimParams& params) {
  return Simulator(net, params).run();
}

/// RM and data conservation at one merge point: every branch FRM is forwarded
/// exactly once, BitMark never sends more BRM copies down a branch than it
/// received FRMs from it, and downstream data volume matches the branch sum
/// within one measurement interval of the output link.
struct ConservationReport {
  bool frm_ok = false;
  bool brm_ok = false;
  bool data_ok = false;
  std::string detail;
  bool ok() const { return frm_ok && brm_ok && data_ok; }
};

inline ConservationReport conservation_check(const SimResult& result, const SwitchId& sw,
                                             const VcId& vc, const SimParams& params) {
  ConservationReport rep;
  const MergePointCounters* mp = nullptr;
  for (const auto& m : result.merge_points)
    if (m.sw == sw && m.vc == vc) mp = &m;
  if (!mp) {
    rep.detail = "no merge point " + sw + ":" + vc;
    return rep;
  }
  std::int64_t frm_sum = 0, data_sum = 0;
  for (const auto& [q, n] : mp->frm_in) frm_sum += n;
  for (const auto& [q, n] : mp->data_in) data_sum += n;
  rep.frm_ok = frm_sum == mp->frm_fwd;

  rep.brm_ok = true;
  for (const auto& [q, n] : mp->brm_down) {
    auto it = mp->frm_in.find(q);
    std::int64_t in = it == mp->frm_in.end() ? 0 : it->second;
    if (params.merge_alg == MergeAlgorithm::BitMark ? n > in : n != in) rep.brm_ok = false;
  }

  // one interval of the output link, in cells
  __int128 slack = static_cast<__int128>(mp->out_capacity_mbps.num()) * params.interval_us /
                   (static_cast<__int128>(mp->out_capacity_mbps.den()) * kCellBits);
  std::int64_t allowed = static_cast<std::int64_t>(slack) + 2;
  std::int64_t diff = data_sum - mp->data_fwd;
  if (diff < 0) diff = -diff;
  rep.data_ok = diff <= allowed;

  std::ostringstream os;
  os << "frm_in=" << frm_sum << " frm_fwd=" << mp->frm_fwd << " data_in=" << data_sum
     << " data_fwd=" << mp->data_fwd << " slack=" << allowed;
  rep.detail = os.str();
  return rep;
}

/// Chain scenario with `depth` merge points between the deepest leaf L0 and
/// the root: L0 and L1 join at Sw1, one more leaf joins at every switch up to
/// Sw<depth>.
inline Scenario make_depth_chain_scenario(int depth) {
  Scenario sc;
  VirtualConnection vc;
  vc.id = "M";
  vc.dest = "D";
  auto swname = [](int i) { return "Sw" + std::to_string(i); };
  for (int i = 1; i <= depth + 1; ++i) sc.switches.push_back(swname(i));

  auto add_link = [&sc](const std::string& id, Endpoint from, Endpoint to) {
    sc.links.push_back(Link{id, std::move(from), std::move(to), Rational(150)});
  };
  add_link("A0", Endpoint::source("L0"), Endpoint::switch_port(swname(1), 1));
  vc.sources.push_back("L0");
  vc.route[swname(1)][1] = 10;
  for (int i = 1; i <= depth; ++i) {
    std::string leaf = "L" + std::to_string(i);
    int port = i == 1 ? 2 : 1;
    add_link("A" + std::to_string(i), Endpoint::source(leaf), Endpoint::switch_port(swname(i), port));
    vc.sources.push_back(leaf);
    vc.route[swname(i)][port] = 10;
  }
  for (int i = 1; i <= depth; ++i) {
    add_link("T" + std::to_string(i), Endpoint::switch_port(swname(i), 10),
             Endpoint::switch_port(swname(i + 1), 0));
    vc.route[swname(i + 1)][0] = 10;
  }
  add_link("AD", Endpoint::switch_port(swname(depth + 1), 10), Endpoint::dest("D"));
  sc.vcs.push_back(std::move(vc));
  return sc;
}

struct ProbeRow {
  int depth = 0;
  MergeAlgorithm alg = MergeAlgorithm::Turnaround;
  double feedback_delay_us = -1;  // root-side birth -> deepest leaf
  double rm_rtt_us = -1;          // FRM -> answering BRM at the deepest leaf
};

/// Measures feedback latency at the deepest leaf of depth-k merge chains for
/// both merge-point algorithms.
inline std::vector<ProbeRow> feedback_delay_probe(const std::vector<int>& depths,
                                                  SimParams params) {
  std::vector<ProbeRow> rows;
  for (int k : depths) {
    Scenario sc = make_depth_chain_scenario(k);
    auto vr = sc.validate();
    if (!vr.ok()) throw std::logic_error("depth chain scenario invalid");
    for (MergeAlgorithm alg : {MergeAlgorithm::Turnaround, MergeAlgorithm::BitMark}) {
      params.merge_alg = alg;
      SimResult res = run_simulation(*vr.network, params);
      ProbeRow row;
      row.depth = k;
      row.alg = alg;
      row.feedback_delay_us = res.source("L0").mean_info_delay_us;
      row.rm_rtt_us = res.source("L0").mean_rm_rtt_us;
      rows.push_back(row);
    }
  }
  return rows;
}

inline std::string probe_csv(const std::vector<ProbeRow>& rows) {
  std::ostringstream os;
  os << "depth,algorithm,feedback_delay_us,rm_rtt_us\n";
  for (const auto& r : rows) {
    char a[32], b[32];
    std::snprintf(a, sizeof a, "%.3f", r.feedback_delay_us);
    std::snprintf(b, sizeof b, "%.3f", r.rm_rtt_us);
    os << r.depth << "," << merge_algorithm_name(r.alg) << "," << a << "," << b << "\n";
  }
  return os.str();
}

}  // namespace mpfair::sim
