#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

namespace vmbcd {

// One per-epoch row of a run's convergence log.  rel_gap is (F - F*)/F* when
// F* is known (0 otherwise); g_norm_sq is the squared norm of the
// identity-metric proximal-gradient step; weighted_epoch accumulates
// nnz(A_i)/nnz(A) per iteration.  All fields are finite.
struct trace_record {
  long long epoch = 0;
  double f = 0;
  double rel_gap = 0;
  double g_norm_sq = 0;
  double mean_alpha = 0;
  double sparsity = 0;
  double weighted_epoch = 0;
  double wall_ms = 0;
};

struct run_trace {
  std::string name;
  std::vector<trace_record> records;
};

inline const char* trace_csv_header() {
  return "epoch,F,rel_gap,G_norm_sq,mean_alpha,sparsity,weighted_epoch,wall_ms";
}

// %.17g round-trips doubles exactly, so identical runs serialize identically.
inline void write_trace_csv(std::ostream& out, const run_trace& t) {
  out << trace_csv_header() << '\n';
  char buf[256];
  for (const trace_record& r : t.records) {
    std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g",
                  r.epoch, r.f, r.rel_gap, r.g_norm_sq, r.mean_alpha, r.sparsity,
                  r.weighted_epoch, r.wall_ms);
    out << buf << '\n';
  }
}

}  // namespace vmbcd
