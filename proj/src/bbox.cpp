#include "lilt/bbox.hpp"

#include <algorithm>
#include <cmath>

#include "lilt/errors.hpp"

namespace lilt {

bool NormalizedBBox::valid() const {
  auto in_range = [](int v) { return v >= 0 && v <= 1000; };
  return in_range(xmin) && in_range(xmax) && in_range(ymin) && in_range(ymax) &&
         in_range(width) && in_range(height) && xmin <= xmax && ymin <= ymax &&
         width == xmax - xmin && height == ymax - ymin;
}

NormalizedBBox cls_box() { return {0, 0, 0, 0, 0, 0}; }
NormalizedBBox sep_box() { return {1000, 1000, 1000, 1000, 0, 0}; }
NormalizedBBox pad_box() { return {0, 0, 0, 0, 0, 0}; }

namespace {
int scale_coord(double v, double page_dim) {
  const int n = static_cast<int>(std::floor(v * 1000.0 / page_dim + 0.5));
  return std::clamp(n, 0, 1000);
}
}  // namespace

NormalizedBBox normalize_bbox(const RawBBox& raw, double page_w, double page_h) {
  if (page_w <= 0 || page_h <= 0) {
    throw DataError("normalize_bbox: non-positive page dimension");
  }
  if (raw.x0 > raw.x1 || raw.y0 > raw.y1) {
    throw DataError("normalize_bbox: inverted box");
  }
  NormalizedBBox out;
  out.xmin = scale_coord(raw.x0, page_w);
  out.xmax = scale_coord(raw.x1, page_w);
  out.ymin = scale_coord(raw.y0, page_h);
  out.ymax = scale_coord(raw.y1, page_h);
  out.width = out.xmax - out.xmin;
  out.height = out.ymax - out.ymin;
  return out;
}

}  // namespace lilt
