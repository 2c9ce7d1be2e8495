#pragma once

#include <map>
#include <vector>

#include "mpfair/scenario.hpp"
#include "mpfair/sim/cell.hpp"

namespace mpfair::sim {

/// Source ACR update on receiving a BRM: ACR <- min(PCR, ER), clamped so
/// ICR <= ACR <= PCR holds at all times.
inline Rational acr_on_brm(const Rational& er, const Rational& pcr, const Rational& icr) {
  Rational acr = er < pcr ? er : pcr;
  return acr < icr ? icr : acr;
}

/// A BRM to send down one branch of a merge point.
struct MergeBrmAction {
  int branch = -1;
  Rational er;
  Time info_birth = -1;
  Time trigger = -1;
};

/// RM-cell state machine at one merge point (switch, VC, output port).
///
/// Turnaround: every branch FRM is answered immediately with a BRM carrying
/// the MER register, and MER is then reset to the peak cell rate; BRM cells
/// from the root side refill MER and are discarded. A downstream-allocation
/// estimate (the last root-side ER) additionally caps what a read hands out,
/// so a read racing the refill does not advertise the reset value.
///
/// BitMark: branch FRMs only set the branch's bit; a root-side BRM is
/// duplicated to every marked branch and the bits clear. BitMark never
/// originates BRM cells and Turnaround never duplicates them.
///
/// Under VC merge the propagated ER divides equally among the branches (each
/// branch is one flow locally); under VP merge it passes through undivided.
class MergePointState {
 public:
  MergePointState() = default;
  MergePointState(MergeAlgorithm alg, MergeMode mode, Rational pcr, std::vector<int> branches,
                  bool mer_min_update = false)
      : alg_(alg), mode_(mode), pcr_(std::move(pcr)), mer_(pcr_), est_(pcr_),
        min_update_(mer_min_update) {
    for (int b : branches) bit_[b] = {false, -1};
  }

  /// FRM received on `branch`. `local_cap` is the rate this switch can
  /// support on the forward link (its advertised level). The FRM itself is
  /// always forwarded toward the root by the caller.
  std::vector<MergeBrmAction> on_frm(int branch, Time trigger, const Rational& local_cap) {
    if (alg_ == MergeAlgorithm::BitMark) {
      auto& bt = bit_.at(branch);
      if (!bt.first) bt = {true, trigger};
      return {};
    }
    MergeBrmAction act;
    act.branch = branch;
    act.er = mer_;
    if (est_ < act.er) act.er = est_;
    if (local_cap < act.er) act.er = local_cap;
    if (mode_ == MergeMode::VcMerge) act.er /= Rational(static_cast<std::int64_t>(bit_.size()));
    act.info_birth = mer_birth_ >= 0 ? mer_birth_ : est_birth_;
    act.trigger = trigger;
    mer_ = pcr_;
    mer_birth_ = -1;
    return {act};
  }

  /// BRM received from the root side, already reduced by this switch.
  std::vector<MergeBrmAction> on_brm(const Rational& er, Time info_birth) {
    if (alg_ == MergeAlgorithm::Turnaround) {
      if (!(min_update_ && mer_ < er)) {
        mer_ = er;
        mer_birth_ = info_birth;
      }
      est_ = er;
      est_birth_ = info_birth;
      return {};  // discarded
    }
    std::vector<MergeBrmAction> acts;
    Rational er_out = er;
    if (mode_ == MergeMode::VcMerge) er_out /= Rational(static_cast<std::int64_t>(bit_.size()));
    for (auto& [b, bt] : bit_) {
      if (!bt.first) continue;
      acts.push_back({b, er_out, info_birth, bt.second});
      bt = {false, -1};
    }
    return acts;
  }

  const Rational& mer() const { return mer_; }
  bool bit_set(int branch) const { return bit_.at(branch).first; }
  int branch_count() const { return static_cast<int>(bit_.size()); }

 private:
  MergeAlgorithm alg_ = MergeAlgorithm::Turnaround;
  MergeMode mode_ = MergeMode::VpMerge;
  Rational pcr_;
  Rational mer_;
  Time mer_birth_ = -1;
  Rational est_;
  Time est_birth_ = -1;
  std::map<int, std::pair<bool, Time>> bit_;
  bool min_update_ = false;
};

}  // namespace mpfair::sim
