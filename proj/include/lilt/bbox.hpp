#pragma once

#include <cstdint>

namespace lilt {

// Axis-aligned box in page pixel space, x0 <= x1 and y0 <= y1.
struct RawBBox {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;
};

// Box discretized to the [0, 1000] grid, with redundant extent fields.
struct NormalizedBBox {
  int xmin = 0, xmax = 0, ymin = 0, ymax = 0, width = 0, height = 0;

  bool operator==(const NormalizedBBox&) const = default;
  bool valid() const;
};

// [CLS] and [PAD] carry the all-zero box, [SEP] the corner box.
NormalizedBBox cls_box();
NormalizedBBox sep_box();
NormalizedBBox pad_box();

// Maps each corner coordinate v to round(v * 1000 / page_dim), half away from
// zero, clamped to [0, 1000]; extents are recomputed from the mapped corners.
NormalizedBBox normalize_bbox(const RawBBox& raw, double page_w, double page_h);

}  // namespace lilt
