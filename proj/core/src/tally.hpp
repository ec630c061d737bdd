#pragma once

#include "mapreplay/processed_trace.hpp"

namespace mapreplay::detail {

// Opcode tallies of stats() without the encoded size.
Characterization tally(const ProcessedTrace& trace);

}  // namespace mapreplay::detail
