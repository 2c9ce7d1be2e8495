#pragma once

#include <cstdint>

#include "mpfair/rational.hpp"

namespace mpfair::sim {

using Time = std::int64_t;  // nanoseconds of simulated time

constexpr int kCellBits = 53 * 8;  // ATM cell on the wire

/// One ATM cell. Data cells carry the AAL5 end-of-message flag; RM cells
/// carry the rate fields. `origin` names the emitting leaf and exists for
/// tracing and VP-merge accounting; VC-merge switch logic never reads it.
struct Cell {
  enum class Kind : std::uint8_t { Data, Frm, Brm };
  Kind kind = Kind::Data;
  int vc = -1;
  int origin = -1;
  bool eom = false;
  Rational er;
  Rational ccr;
  Time emitted_at = 0;
  Time trigger = -1;     // emission time of the FRM this feedback answers
  Time info_birth = -1;  // when the carried rate left the root side
};

}  // namespace mpfair::sim
