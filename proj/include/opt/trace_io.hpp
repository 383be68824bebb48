#pragma once

#include <cstdio>
#include <ostream>
#include <string>

#include "opt/errors.hpp"
#include "opt/methods.hpp"

// CSV export of run traces. Values print with %.17g so doubles round-trip
// exactly and identical runs reproduce byte-identical files.

namespace opt {

namespace detail {

inline std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

// Columns: k, F, gmap_sq, subgrad_sq, and dist_to_opt_sq when the caller can
// supply the optimum. F and subgrad_sq are evaluated at the advanced point of
// each record, gmap_sq at the main iterate, dist_to_opt_sq at the main
// iterate as well.
inline void write_trace_csv(std::ostream& out, const RunTrace& tr, const Vec* x_star = nullptr) {
  out << "k,F,gmap_sq,subgrad_sq";
  if (x_star) out << ",dist_to_opt_sq";
  out << "\n";
  for (std::size_t k = 0; k < tr.records.size(); ++k) {
    const auto& r = tr.records[k];
    out << k << ',' << detail::fmt17(r.F) << ',' << detail::fmt17(r.gmap_sq) << ','
        << detail::fmt17(r.subgrad_sq);
    if (x_star) out << ',' << detail::fmt17((r.x - *x_star).squaredNorm());
    out << "\n";
  }
}

// Long-format variant for multi-method files: a leading method label column,
// then the per-record schema. Callers write the header once via
// write_long_csv_header and append one block per trace.
inline void write_long_csv_header(std::ostream& out, bool with_dist) {
  out << "method,k,F,gmap_sq,subgrad_sq";
  if (with_dist) out << ",dist_to_opt_sq";
  out << "\n";
}

inline void append_long_csv(std::ostream& out, const std::string& label, const RunTrace& tr,
                            const Vec* x_star = nullptr) {
  if (label.find(',') != std::string::npos || label.find('\n') != std::string::npos)
    fail(ErrorCode::invalid_argument, "method label must not contain ',' or newlines");
  for (std::size_t k = 0; k < tr.records.size(); ++k) {
    const auto& r = tr.records[k];
    out << label << ',' << k << ',' << detail::fmt17(r.F) << ',' << detail::fmt17(r.gmap_sq) << ','
        << detail::fmt17(r.subgrad_sq);
    if (x_star) out << ',' << detail::fmt17((r.x - *x_star).squaredNorm());
    out << "\n";
  }
}

}  // namespace opt
