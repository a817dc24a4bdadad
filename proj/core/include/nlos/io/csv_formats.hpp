#pragma once

#include <iosfwd>
#include <string>

#include "nlos/histogram.hpp"
#include "nlos/localization.hpp"
#include "nlos/studies.hpp"

namespace nlos::io {

// Histogram CSV:
//   # format=nlos-histogram/1
//   # bin_width_s=4e-12
//   # t0_offset_s=0
//   # pixel=0
//   # acq_time_s=1
//   # wrap_period_s=2.5e-08        (or "none")
//   bin_index,counts
//   0,3
//   ...
// Real numbers use the shortest representation that round-trips exactly and
// never depend on the C locale.

void write_histogram_csv(std::ostream& out, const TransientHistogram& hist);

/// Throws ValidationError with field "line <n>" on malformed input.
TransientHistogram read_histogram_csv(std::istream& in);

/// Plot-ready "x,y,value" rows (linear-domain values) with a grid header.
void write_map_csv(std::ostream& out, const ProbabilityMap& map);

/// One row per (step, object, metric).
void write_sweep_csv(std::ostream& out, const SweepResult& result);

/// Locale-independent shortest round-trip formatting.
std::string format_double(double v);

}  // namespace nlos::io
