#pragma once

#include <algorithm>
#include <stdexcept>

#include <Eigen/Core>

#include "vmbcd/sparse_matrix.hpp"

namespace vmbcd {

enum class loss_kind { squared, squared_hinge, biweight };

// Separable loss g(z) = sum_r term(z_r; b_r) with scalar weight c.
//   squared:        (c/2) (z - b)^2
//   squared_hinge:  c max(1 - b z, 0)^2        (labels in {-1, +1})
//   biweight:       c t^2/(1 + t^2), t = z - b (bounded, nonconvex)
struct separable_loss {
  loss_kind kind = loss_kind::squared;
  double c = 1.0;

  bool convex() const { return kind != loss_kind::biweight; }

  // Upper bound on the rowwise curvature, uniform in z.
  double curvature_bound() const {
    switch (kind) {
      case loss_kind::squared: return c;
      case loss_kind::squared_hinge: return 2.0 * c;
      case loss_kind::biweight: return 2.0 * c;
    }
    throw std::logic_error("separable_loss: bad kind");
  }
};

namespace detail {
inline void require_finite(const vector_t& z) {
  if (!z.allFinite()) throw std::invalid_argument("loss: non-finite input");
}
}  // namespace detail

inline double loss_eval(const separable_loss& l, const vector_t& z, const vector_t& b) {
  detail::require_finite(z);
  double s = 0;
  switch (l.kind) {
    case loss_kind::squared:
      for (index_t r = 0; r < z.size(); ++r) {
        const double t = z[r] - b[r];
        s += t * t;
      }
      return 0.5 * l.c * s;
    case loss_kind::squared_hinge:
      for (index_t r = 0; r < z.size(); ++r) {
        const double t = std::max(1.0 - b[r] * z[r], 0.0);
        s += t * t;
      }
      return l.c * s;
    case loss_kind::biweight:
      for (index_t r = 0; r < z.size(); ++r) {
        const double t = z[r] - b[r];
        s += t * t / (1.0 + t * t);
      }
      return l.c * s;
  }
  throw std::logic_error("separable_loss: bad kind");
}

inline vector_t loss_grad(const separable_loss& l, const vector_t& z, const vector_t& b) {
  detail::require_finite(z);
  vector_t g(z.size());
  switch (l.kind) {
    case loss_kind::squared:
      for (index_t r = 0; r < z.size(); ++r) g[r] = l.c * (z[r] - b[r]);
      return g;
    case loss_kind::squared_hinge:
      for (index_t r = 0; r < z.size(); ++r)
        g[r] = -2.0 * l.c * b[r] * std::max(1.0 - b[r] * z[r], 0.0);
      return g;
    case loss_kind::biweight:
      for (index_t r = 0; r < z.size(); ++r) {
        const double t = z[r] - b[r];
        const double den = 1.0 + t * t;
        g[r] = l.c * 2.0 * t / (den * den);
      }
      return g;
  }
  throw std::logic_error("separable_loss: bad kind");
}

// Rowwise second derivative, signed; the hinge kink reports 0.  Metric
// construction clamps this at 0 from below.
inline vector_t loss_curv_diag(const separable_loss& l, const vector_t& z, const vector_t& b) {
  detail::require_finite(z);
  vector_t w(z.size());
  switch (l.kind) {
    case loss_kind::squared:
      w.setConstant(l.c);
      return w;
    case loss_kind::squared_hinge:
      for (index_t r = 0; r < z.size(); ++r)
        w[r] = (1.0 - b[r] * z[r]) > 0 ? 2.0 * l.c : 0.0;
      return w;
    case loss_kind::biweight:
      for (index_t r = 0; r < z.size(); ++r) {
        const double t2 = (z[r] - b[r]) * (z[r] - b[r]);
        const double den = 1.0 + t2;
        w[r] = -2.0 * l.c * (3.0 * t2 - 1.0) / (den * den * den);
      }
      return w;
  }
  throw std::logic_error("separable_loss: bad kind");
}

}  // namespace vmbcd
