#pragma once

#include <string>
#include <vector>

#include "settler/io/csv.hpp"

namespace settler::io {

struct PreprocessOptions {
  /// Bracketing samples further apart than this mark the point as bridged.
  double max_gap_s = 2.0;
};

struct PreprocessResult {
  CsvTable table;
  std::vector<std::string> dropped;  // channels with fewer than two samples
  std::size_t flagged_points = 0;
};

/// Resamples every channel of `raw` (all columns except tau_s and gap_count;
/// empty cells are missing samples) onto the integer-second grid spanning
/// the raw stamps by linear interpolation. Values outside a channel's own
/// sample range are held and flagged. gap_count counts bridged channels per
/// point and carries over existing counts at matching stamps. Without an
/// h_dp_m channel, h_dp_m is the mean of the available detection channels.
PreprocessResult preprocess(const CsvTable& raw, const PreprocessOptions& options = {});

}  // namespace settler::io
