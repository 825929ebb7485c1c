#pragma once

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <vmbcd/vmbcd.hpp>

namespace test_util {

using vmbcd::index_t;
using vmbcd::matrix_t;
using vmbcd::vector_t;

struct problem_opts {
  std::uint64_t seed = 1;
  index_t rows = 40;
  index_t cols = 20;
  index_t block_size = 1;
  vmbcd::loss_kind loss = vmbcd::loss_kind::squared;
  double c = 1.0;
  vmbcd::reg_kind reg = vmbcd::reg_kind::l1;
  double weight = 0.1;
  std::vector<double> scale_profile = {1.0};
  double noise = 0.05;
};

inline vmbcd::composite_problem make_problem(const problem_opts& o) {
  vmbcd::synth_spec s;
  s.seed = o.seed;
  s.rows = o.rows;
  s.cols = o.cols;
  s.block_size = o.block_size;
  s.scale_profile = o.scale_profile;
  s.noise_sigma = o.noise;
  s.labels = o.loss == vmbcd::loss_kind::squared_hinge ? vmbcd::label_kind::sign
                                                       : vmbcd::label_kind::regression;
  vmbcd::composite_problem p;
  p.data = vmbcd::synth_regression(s).data;
  p.loss = {o.loss, o.c};
  p.reg = {o.reg, o.weight};
  return p;
}

inline vector_t randn(vmbcd::rng& gen, index_t n) {
  vector_t v(n);
  for (index_t j = 0; j < n; ++j) v[j] = gen.next_normal();
  return v;
}

// Golden-section minimizer of a unimodal scalar function on [a, b].
inline double golden_min(const std::function<double(double)>& f, double a, double b,
                         double tol = 1e-12) {
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = f(d);
    }
  }
  return (a + b) / 2;
}

inline vector_t central_diff(const std::function<double(const vector_t&)>& f, const vector_t& x,
                             double h = 1e-6) {
  vector_t g(x.size());
  for (index_t j = 0; j < x.size(); ++j) {
    vector_t xp = x, xm = x;
    xp[j] += h;
    xm[j] -= h;
    g[j] = (f(xp) - f(xm)) / (2 * h);
  }
  return g;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Drops the last k comma-separated fields of every line (wall-clock columns).
inline std::string strip_last_fields(const std::string& text, int k) {
  std::istringstream in(text);
  std::ostringstream out;
  std::string line;
  while (std::getline(in, line)) {
    for (int i = 0; i < k; ++i) {
      const std::size_t pos = line.rfind(',');
      if (pos != std::string::npos) line.erase(pos);
    }
    out << line << '\n';
  }
  return out.str();
}

}  // namespace test_util
