#pragma once

#include <deque>
#include <map>
#include <optional>

#include "mpfair/sim/cell.hpp"

namespace mpfair::sim {

/// Cut-through merge queue for one (switch, VC, output port): one FIFO per
/// input flow, and at most one flow being forwarded at a time. Cells of the
/// in-progress packet pass; other flows buffer until the EOM cell goes
/// through, then the next flow is picked round-robin.
///
/// Mid-packet starvation blocks the output for this VC: if the current
/// packet's next cell has not arrived yet, dequeue yields nothing even when
/// other branches hold cells.
class CutThroughQueue {
 public:
  void enqueue(int branch, const Cell& cell) {
    queues_[branch].push_back(cell);
    ++total_;
  }

  std::optional<Cell> dequeue() {
    if (total_ == 0) return std::nullopt;
    if (current_ < 0) {
      current_ = next_branch();
      if (current_ < 0) return std::nullopt;
    }
    auto& q = queues_[current_];
    if (q.empty()) return std::nullopt;  // waiting for the rest of the packet
    Cell cell = q.front();
    q.pop_front();
    --total_;
    if (cell.eom) {
      last_done_ = current_;
      current_ = -1;
    }
    return cell;
  }

  bool idle() const { return total_ == 0 && current_ < 0; }
  std::size_t buffered() const { return total_; }
  int current_branch() const { return current_; }

 private:
  // first non-empty branch strictly after last_done_, wrapping
  int next_branch() const {
    if (queues_.empty()) return -1;
    auto it = queues_.upper_bound(last_done_);
    for (std::size_t i = 0; i < queues_.size(); ++i) {
      if (it == queues_.end()) it = queues_.begin();
      if (!it->second.empty()) return it->first;
      ++it;
    }
    return -1;
  }

  std::map<int, std::deque<Cell>> queues_;
  int current_ = -1;
  int last_done_ = -1;
  std::size_t total_ = 0;
};

}  // namespace mpfair::sim
