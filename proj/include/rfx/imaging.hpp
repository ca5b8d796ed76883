#pragma once
// B-mode rendering: envelope detection, log compression, dynamic-range
// windowing, and PGM export.

#include <string>
#include <vector>

#include "rfx/metrics.hpp"
#include "rfx/rfsim.hpp"

namespace rfx::imaging {

struct BmodeImage {
  metrics::Image pixels;  // depth x lateral, values in [0, 1]
  double dynamic_range_db = 60.0;
  double mm_per_row = 0.0;
  double mm_per_col = 0.0;
};

// Envelope per line, normalize by the global maximum, log-compress, clamp to
// [-dynamic_range_db, 0], map to [0, 1]. Columns follow line order.
BmodeImage render_bmode(const std::vector<sim::RfLine>& lines,
                        double dynamic_range_db = 60.0,
                        double lateral_extent_m = 0.0);

// 8-bit binary PGM (P5), pixel = round(255 * v).
void export_image(const BmodeImage& img, const std::string& path);

// Side-by-side panel composition (truth | prediction | input), one-column
// gap between panels.
BmodeImage compose_triptych(const BmodeImage& truth, const BmodeImage& pred,
                            const BmodeImage& input);

}  // namespace rfx::imaging
