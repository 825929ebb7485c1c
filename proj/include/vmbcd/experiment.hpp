#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "vmbcd/libsvm.hpp"
#include "vmbcd/solvers.hpp"
#include "vmbcd/synth.hpp"

namespace vmbcd {

enum class x_axis_kind { epochs, weighted_epochs, time };

struct run_spec {
  std::string name;
  algorithm_kind algorithm = algorithm_kind::rcd_unit;
  sampler_kind sampler = sampler_kind::uniform;
  metric_kind metric = metric_kind::hessian_block;
  int inner_budget = 10;
  long long epochs = 10;
  std::uint64_t seed_lo = 1;
  std::uint64_t seed_hi = 1;
};

struct experiment_config {
  bool use_dataset = false;
  std::string dataset_path;
  bool bias = false;
  synth_spec synth;
  index_t block_size = 1;
  separable_loss loss;
  separable_reg reg{reg_kind::l1, 1.0};
  std::string out_dir = "out";
  bool plot = true;
  x_axis_kind x_axis = x_axis_kind::epochs;
  std::vector<run_spec> runs;

  void validate() const {
    if (runs.empty()) throw std::invalid_argument("config: at least one [run] section required");
    if (!(loss.c > 0)) throw std::invalid_argument("config: c must be positive");
    if (reg.weight < 0) throw std::invalid_argument("config: lambda must be non-negative");
    if (block_size < 1) throw std::invalid_argument("config: block_size must be >= 1");
    if (use_dataset && dataset_path.empty())
      throw std::invalid_argument("config: problem=dataset requires a dataset path");
    if (!use_dataset) {
      if (synth.rows < 1 || synth.cols < 1) throw std::invalid_argument("config: rows/cols must be >= 1");
      if (synth.noise_sigma < 0) throw std::invalid_argument("config: noise_sigma must be >= 0");
      if (synth.support_fraction < 0 || synth.support_fraction > 1)
        throw std::invalid_argument("config: support_fraction must lie in [0,1]");
    }
    for (const run_spec& r : runs) {
      if (r.epochs < 1) throw std::invalid_argument("config: epochs must be >= 1");
      if (r.inner_budget < 1) throw std::invalid_argument("config: t must be >= 1");
      if (r.seed_lo > r.seed_hi) throw std::invalid_argument("config: empty seed range");
      if (r.algorithm == algorithm_kind::fista && !loss.convex())
        throw std::invalid_argument("config: fista requires a convex loss");
    }
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::string sanitize_name(const std::string& s) {
  std::string out;
  for (char ch : s) {
    const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) out.push_back(c);
    else if (!out.empty() && out.back() != '-') out.push_back('-');
  }
  while (!out.empty() && out.back() == '-') out.pop_back();
  return out;
}

inline double parse_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0' || !std::isfinite(x))
    throw std::invalid_argument("config: bad numeric value for " + key + ": " + v);
  return x;
}

inline long long parse_int(const std::string& key, const std::string& v) {
  char* end = nullptr;
  const long long x = std::strtoll(v.c_str(), &end, 10);
  if (end == v.c_str() || *end != '\0')
    throw std::invalid_argument("config: bad integer value for " + key + ": " + v);
  return x;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("config: bad boolean value for " + key + ": " + v);
}

inline std::vector<double> parse_double_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  if (out.empty()) throw std::invalid_argument("config: empty list for " + key);
  return out;
}

inline loss_kind parse_loss(const std::string& v) {
  if (v == "squared") return loss_kind::squared;
  if (v == "squared_hinge") return loss_kind::squared_hinge;
  if (v == "biweight") return loss_kind::biweight;
  throw std::invalid_argument("config: unknown loss: " + v);
}

inline reg_kind parse_reg(const std::string& v) {
  if (v == "zero") return reg_kind::zero;
  if (v == "l1") return reg_kind::l1;
  if (v == "group_l2") return reg_kind::group_l2;
  throw std::invalid_argument("config: unknown regularizer: " + v);
}

inline algorithm_kind parse_algorithm(const std::string& v) {
  if (v == "vm-bcd") return algorithm_kind::vm_bcd;
  if (v == "rcd-unit") return algorithm_kind::rcd_unit;
  if (v == "rcd-short") return algorithm_kind::rcd_short;
  if (v == "fista") return algorithm_kind::fista;
  throw std::invalid_argument("config: unknown algorithm: " + v);
}

inline sampler_kind parse_sampler(const std::string& v) {
  if (v == "uniform") return sampler_kind::uniform;
  if (v == "lipschitz") return sampler_kind::lipschitz;
  if (v == "optimal") return sampler_kind::optimal;
  throw std::invalid_argument("config: unknown sampler: " + v);
}

inline metric_kind parse_metric(const std::string& v) {
  if (v == "hessian") return metric_kind::hessian_block;
  if (v == "fixed") return metric_kind::fixed_global_bound;
  throw std::invalid_argument("config: unknown metric: " + v);
}

inline x_axis_kind parse_x_axis(const std::string& v) {
  if (v == "epochs") return x_axis_kind::epochs;
  if (v == "weighted-epochs") return x_axis_kind::weighted_epochs;
  if (v == "time") return x_axis_kind::time;
  throw std::invalid_argument("config: unknown x_axis: " + v);
}

inline void parse_seeds(const std::string& v, run_spec& r) {
  const std::size_t dots = v.find("..");
  if (dots == std::string::npos) {
    const long long n = parse_int("seeds", v);
    if (n < 1) throw std::invalid_argument("config: seeds must be >= 1");
    r.seed_lo = 1;
    r.seed_hi = static_cast<std::uint64_t>(n);
    return;
  }
  const long long lo = parse_int("seeds", v.substr(0, dots));
  const long long hi = parse_int("seeds", v.substr(dots + 2));
  if (lo < 0 || hi < lo) throw std::invalid_argument("config: bad seed range: " + v);
  r.seed_lo = static_cast<std::uint64_t>(lo);
  r.seed_hi = static_cast<std::uint64_t>(hi);
}

inline std::string default_run_name(const run_spec& r) {
  std::string n;
  switch (r.algorithm) {
    case algorithm_kind::vm_bcd:
      n = "vm-" + std::to_string(r.inner_budget);
      if (r.metric == metric_kind::fixed_global_bound) n = "fm-" + std::to_string(r.inner_budget);
      break;
    case algorithm_kind::rcd_unit: n = "rcd-unit"; break;
    case algorithm_kind::rcd_short: n = "rcd-short"; break;
    case algorithm_kind::fista: n = "fista"; break;
  }
  if (r.algorithm != algorithm_kind::fista) {
    switch (r.sampler) {
      case sampler_kind::uniform: n += "-uniform"; break;
      case sampler_kind::lipschitz: n += "-lipschitz"; break;
      case sampler_kind::optimal: n += "-optimal"; break;
    }
  }
  return n;
}

}  // namespace detail

// Flat key=value text, '#' comments, one optional global section followed by
// repeating [run] sections.  Unknown keys are errors.
inline experiment_config parse_experiment_config(std::istream& in) {
  experiment_config cfg;
  run_spec* cur = nullptr;
  std::string line;
  long long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line == "[run]") {
      cfg.runs.emplace_back();
      cur = &cfg.runs.back();
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(line_no) + " is not key=value: " + line);
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    if (key.empty() || val.empty())
      throw std::invalid_argument("config: line " + std::to_string(line_no) + " has empty key or value");
    if (cur == nullptr) {
      if (key == "problem") {
        if (val == "dataset") cfg.use_dataset = true;
        else if (val == "synthetic") cfg.use_dataset = false;
        else throw std::invalid_argument("config: unknown problem kind: " + val);
      } else if (key == "dataset") cfg.dataset_path = val;
      else if (key == "bias") cfg.bias = detail::parse_bool(key, val);
      else if (key == "loss") cfg.loss.kind = detail::parse_loss(val);
      else if (key == "c") cfg.loss.c = detail::parse_double(key, val);
      else if (key == "reg") cfg.reg.kind = detail::parse_reg(val);
      else if (key == "lambda") cfg.reg.weight = detail::parse_double(key, val);
      else if (key == "block_size") cfg.block_size = detail::parse_int(key, val);
      else if (key == "rows") cfg.synth.rows = detail::parse_int(key, val);
      else if (key == "cols") cfg.synth.cols = detail::parse_int(key, val);
      else if (key == "noise_sigma") cfg.synth.noise_sigma = detail::parse_double(key, val);
      else if (key == "support_fraction") cfg.synth.support_fraction = detail::parse_double(key, val);
      else if (key == "scale_profile") cfg.synth.scale_profile = detail::parse_double_list(key, val);
      else if (key == "synth_seed") cfg.synth.seed = static_cast<std::uint64_t>(detail::parse_int(key, val));
      else if (key == "labels") {
        if (val == "regression") cfg.synth.labels = label_kind::regression;
        else if (val == "sign") cfg.synth.labels = label_kind::sign;
        else throw std::invalid_argument("config: unknown labels kind: " + val);
      } else if (key == "out") cfg.out_dir = val;
      else if (key == "plot") cfg.plot = detail::parse_bool(key, val);
      else if (key == "x_axis") cfg.x_axis = detail::parse_x_axis(val);
      else throw std::invalid_argument("config: unknown global key: " + key);
    } else {
      if (key == "name") cur->name = detail::sanitize_name(val);
      else if (key == "algorithm") cur->algorithm = detail::parse_algorithm(val);
      else if (key == "sampler") cur->sampler = detail::parse_sampler(val);
      else if (key == "metric") cur->metric = detail::parse_metric(val);
      else if (key == "t") cur->inner_budget = static_cast<int>(detail::parse_int(key, val));
      else if (key == "epochs") cur->epochs = detail::parse_int(key, val);
      else if (key == "seeds") detail::parse_seeds(val, *cur);
      else throw std::invalid_argument("config: unknown run key: " + key);
    }
  }
  cfg.synth.block_size = cfg.block_size;
  cfg.synth.bias_column = cfg.bias;
  for (std::size_t i = 0; i < cfg.runs.size(); ++i) {
    run_spec& r = cfg.runs[i];
    if (r.name.empty()) r.name = detail::default_run_name(r);
    for (std::size_t j = 0; j < i; ++j)
      if (cfg.runs[j].name == r.name) {
        r.name += "-" + std::to_string(i + 1);
        break;
      }
  }
  cfg.validate();
  return cfg;
}

inline experiment_config load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  return parse_experiment_config(in);
}

// Relative dataset paths resolve against $VMBCD_DATA_ROOT when it is set.
inline std::string resolve_dataset_path(const std::string& path) {
  namespace fs = std::filesystem;
  if (fs::path(path).is_absolute()) return path;
  if (const char* root = std::getenv("VMBCD_DATA_ROOT"))
    return (fs::path(root) / path).string();
  return path;
}

namespace detail {

inline dataset append_bias_column(const dataset& d, index_t block_size) {
  const blocked_sparse_matrix& a = d.a;
  std::vector<triplet> entries;
  entries.reserve(static_cast<std::size_t>(a.nnz() + a.rows()));
  for (index_t j = 0; j < a.cols(); ++j)
    for (index_t k = a.col_ptr()[static_cast<std::size_t>(j)];
         k < a.col_ptr()[static_cast<std::size_t>(j) + 1]; ++k)
      entries.push_back({a.row_idx()[static_cast<std::size_t>(k)], j,
                         a.values()[static_cast<std::size_t>(k)]});
  for (index_t r = 0; r < a.rows(); ++r) entries.push_back({r, a.cols(), 1.0});
  dataset out;
  out.a = blocked_sparse_matrix(a.rows(), a.cols() + 1, std::move(entries),
                                make_partition(a.cols() + 1, block_size));
  out.b = d.b;
  return out;
}

}  // namespace detail

inline composite_problem build_problem(const experiment_config& cfg) {
  composite_problem p;
  if (cfg.use_dataset) {
    const std::string path = resolve_dataset_path(cfg.dataset_path);
    if (!std::filesystem::exists(path)) throw std::runtime_error("dataset not found: " + path);
    dataset d = load_libsvm(path, cfg.block_size);
    p.data = cfg.bias ? detail::append_bias_column(d, cfg.block_size) : std::move(d);
  } else {
    p.data = synth_regression(cfg.synth).data;
  }
  p.loss = cfg.loss;
  p.reg = cfg.reg;
  return p;
}

struct aggregate_row {
  long long epoch = 0;
  double f_mean = 0, f_median = 0;
  double rel_gap_mean = 0, rel_gap_median = 0;
  double g_mean = 0, g_median = 0;
  double alpha_mean = 0, alpha_median = 0;
  double sparsity_mean = 0, sparsity_median = 0;
  double weighted_mean = 0, weighted_median = 0;
  double wall_mean = 0, wall_median = 0;
};

using aggregate_series = std::vector<std::pair<std::string, std::vector<aggregate_row>>>;

inline const char* aggregate_csv_header() {
  return "run,epoch,F_mean,F_median,rel_gap_mean,rel_gap_median,G_norm_sq_mean,G_norm_sq_median,"
         "mean_alpha_mean,mean_alpha_median,sparsity_mean,sparsity_median,"
         "weighted_epoch_mean,weighted_epoch_median,wall_ms_mean,wall_ms_median";
}

namespace detail {

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

}  // namespace detail

// Per-epoch mean and median across the seed traces of one run; rows cover the
// epochs present in every trace.
inline std::vector<aggregate_row> aggregate_traces(const std::vector<run_trace>& traces) {
  if (traces.empty()) return {};
  std::size_t len = traces.front().records.size();
  for (const run_trace& t : traces) len = std::min(len, t.records.size());
  std::vector<aggregate_row> rows(len);
  std::vector<double> v(traces.size());
  for (std::size_t e = 0; e < len; ++e) {
    aggregate_row& r = rows[e];
    r.epoch = traces.front().records[e].epoch;
    auto stat = [&](auto field, double& mean, double& median) {
      double sum = 0;
      for (std::size_t s = 0; s < traces.size(); ++s) {
        v[s] = traces[s].records[e].*field;
        sum += v[s];
      }
      mean = sum / static_cast<double>(traces.size());
      median = detail::median_of(v);
    };
    stat(&trace_record::f, r.f_mean, r.f_median);
    stat(&trace_record::rel_gap, r.rel_gap_mean, r.rel_gap_median);
    stat(&trace_record::g_norm_sq, r.g_mean, r.g_median);
    stat(&trace_record::mean_alpha, r.alpha_mean, r.alpha_median);
    stat(&trace_record::sparsity, r.sparsity_mean, r.sparsity_median);
    stat(&trace_record::weighted_epoch, r.weighted_mean, r.weighted_median);
    stat(&trace_record::wall_ms, r.wall_mean, r.wall_median);
  }
  return rows;
}

inline void write_aggregate_csv(std::ostream& out, const aggregate_series& series) {
  out << aggregate_csv_header() << '\n';
  char buf[512];
  for (const auto& [name, rows] : series)
    for (const aggregate_row& r : rows) {
      std::snprintf(buf, sizeof(buf),
                    "%s,%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,"
                    "%.17g,%.17g,%.17g",
                    name.c_str(), r.epoch, r.f_mean, r.f_median, r.rel_gap_mean, r.rel_gap_median,
                    r.g_mean, r.g_median, r.alpha_mean, r.alpha_median, r.sparsity_mean,
                    r.sparsity_median, r.weighted_mean, r.weighted_median, r.wall_mean,
                    r.wall_median);
      out << buf << '\n';
    }
}

inline aggregate_series read_aggregate_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("aggregate: empty file");
  if (detail::trim(line) != aggregate_csv_header())
    throw std::runtime_error("aggregate: unexpected header: " + line);
  aggregate_series series;
  long long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = detail::trim(line);
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 16)
      throw std::runtime_error("aggregate: line " + std::to_string(line_no) + " has " +
                               std::to_string(cells.size()) + " fields, want 16");
    aggregate_row r;
    r.epoch = detail::parse_int("epoch", cells[1]);
    double* fields[] = {&r.f_mean, &r.f_median, &r.rel_gap_mean, &r.rel_gap_median,
                        &r.g_mean, &r.g_median, &r.alpha_mean, &r.alpha_median,
                        &r.sparsity_mean, &r.sparsity_median, &r.weighted_mean,
                        &r.weighted_median, &r.wall_mean, &r.wall_median};
    for (std::size_t i = 0; i < 14; ++i) *fields[i] = detail::parse_double("aggregate", cells[i + 2]);
    if (series.empty() || series.back().first != cells[0]) series.push_back({cells[0], {}});
    series.back().second.push_back(r);
  }
  return series;
}

struct plot_series {
  std::string name;
  std::vector<double> x, y;
};

namespace detail {

inline void svg_num(std::string& out, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  out += buf;
}

inline std::string svg_label(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace detail

// Self-contained SVG: linear x, log10 y, polyline per series.  Output depends
// only on the data, so identical inputs render identical bytes.
inline std::string render_log_plot(const std::vector<plot_series>& series,
                                   const std::string& x_label, const std::string& y_label) {
  const double width = 760, height = 520, ml = 80, mr = 170, mt = 24, mb = 56;
  const double pw = width - ml - mr, ph = height - mt - mb;
  double x_lo = 0, x_hi = 1, y_lo = 1, y_hi = 10;
  bool any = false;
  for (const plot_series& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!(s.y[i] > 0)) continue;
      if (!any) {
        x_lo = x_hi = s.x[i];
        y_lo = y_hi = s.y[i];
        any = true;
      } else {
        x_lo = std::min(x_lo, s.x[i]);
        x_hi = std::max(x_hi, s.x[i]);
        y_lo = std::min(y_lo, s.y[i]);
        y_hi = std::max(y_hi, s.y[i]);
      }
    }
  if (x_hi <= x_lo) x_hi = x_lo + 1;
  double e_lo = std::floor(std::log10(y_lo));
  double e_hi = std::ceil(std::log10(y_hi));
  if (e_hi <= e_lo) e_hi = e_lo + 1;
  auto px = [&](double x) { return ml + (x - x_lo) / (x_hi - x_lo) * pw; };
  auto py = [&](double y) { return mt + (1.0 - (std::log10(y) - e_lo) / (e_hi - e_lo)) * ph; };

  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"760\" height=\"520\" "
         "viewBox=\"0 0 760 520\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"760\" height=\"520\" fill=\"white\"/>\n";

  const int e_step = std::max(1, static_cast<int>((e_hi - e_lo) / 12.0 + 0.999));
  for (double e = e_lo; e <= e_hi + 1e-9; e += e_step) {
    const double y = py(std::pow(10.0, e));
    svg += "<line x1=\"";
    detail::svg_num(svg, ml);
    svg += "\" y1=\"";
    detail::svg_num(svg, y);
    svg += "\" x2=\"";
    detail::svg_num(svg, ml + pw);
    svg += "\" y2=\"";
    detail::svg_num(svg, y);
    svg += "\" stroke=\"#dddddd\"/>\n<text x=\"";
    detail::svg_num(svg, ml - 8);
    svg += "\" y=\"";
    detail::svg_num(svg, y + 4);
    svg += "\" text-anchor=\"end\">1e" + detail::svg_label(e) + "</text>\n";
  }
  for (int i = 0; i <= 5; ++i) {
    const double x = x_lo + (x_hi - x_lo) * i / 5.0;
    svg += "<text x=\"";
    detail::svg_num(svg, px(x));
    svg += "\" y=\"";
    detail::svg_num(svg, mt + ph + 20);
    svg += "\" text-anchor=\"middle\">" + detail::svg_label(x) + "</text>\n";
  }
  svg += "<line x1=\"";
  detail::svg_num(svg, ml);
  svg += "\" y1=\"";
  detail::svg_num(svg, mt);
  svg += "\" x2=\"";
  detail::svg_num(svg, ml);
  svg += "\" y2=\"";
  detail::svg_num(svg, mt + ph);
  svg += "\" stroke=\"black\"/>\n<line x1=\"";
  detail::svg_num(svg, ml);
  svg += "\" y1=\"";
  detail::svg_num(svg, mt + ph);
  svg += "\" x2=\"";
  detail::svg_num(svg, ml + pw);
  svg += "\" y2=\"";
  detail::svg_num(svg, mt + ph);
  svg += "\" stroke=\"black\"/>\n";
  svg += "<text x=\"";
  detail::svg_num(svg, ml + pw / 2);
  svg += "\" y=\"";
  detail::svg_num(svg, height - 12);
  svg += "\" text-anchor=\"middle\">" + x_label + "</text>\n";
  svg += "<text x=\"16\" y=\"";
  detail::svg_num(svg, mt + ph / 2);
  svg += "\" transform=\"rotate(-90 16 ";
  detail::svg_num(svg, mt + ph / 2);
  svg += ")\" text-anchor=\"middle\">" + y_label + "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = palette[s % 8];
    std::string pts;
    for (std::size_t i = 0; i < series[s].x.size(); ++i) {
      if (!(series[s].y[i] > 0)) continue;
      detail::svg_num(pts, px(series[s].x[i]));
      pts += ',';
      detail::svg_num(pts, py(series[s].y[i]));
      pts += ' ';
    }
    if (!pts.empty()) pts.pop_back();
    svg += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.5\" points=\"" +
           pts + "\"/>\n";
    const double ly = mt + 16 + 18 * static_cast<double>(s);
    svg += "<rect x=\"";
    detail::svg_num(svg, ml + pw + 12);
    svg += "\" y=\"";
    detail::svg_num(svg, ly - 9);
    svg += "\" width=\"10\" height=\"10\" fill=\"" + std::string(color) + "\"/>\n<text x=\"";
    detail::svg_num(svg, ml + pw + 27);
    svg += "\" y=\"";
    detail::svg_num(svg, ly);
    svg += "\">" + series[s].name + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

struct experiment_result {
  bool convex = false;
  double f_star = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> files;  // paths relative to the output directory
};

// Executes every (run, seed) pair, writes one trace CSV each, one aggregate
// CSV for the experiment, and optionally one SVG plot.  Workers pull jobs
// from a shared counter; results land in preassigned slots so the output is
// independent of scheduling.
inline experiment_result run_experiment(const experiment_config& cfg, int threads = 1,
                                        std::uint64_t seed_offset = 0) {
  cfg.validate();
  const composite_problem p = build_problem(cfg);

  experiment_result result;
  result.convex = p.loss.convex();
  long long max_epochs = 1;
  for (const run_spec& r : cfg.runs) max_epochs = std::max(max_epochs, r.epochs);
  if (result.convex) result.f_star = reference_optimum(p, 10 * max_epochs).f;

  struct job {
    std::size_t run;
    std::uint64_t seed;
  };
  std::vector<job> jobs;
  for (std::size_t r = 0; r < cfg.runs.size(); ++r)
    for (std::uint64_t s = cfg.runs[r].seed_lo; s <= cfg.runs[r].seed_hi; ++s)
      jobs.push_back({r, s + seed_offset});

  std::vector<run_trace> traces(jobs.size());
  std::vector<std::string> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t j = next.fetch_add(1);
      if (j >= jobs.size()) return;
      const run_spec& spec = cfg.runs[jobs[j].run];
      run_config rc;
      rc.algorithm = spec.algorithm;
      rc.sampler = spec.sampler;
      rc.metric = spec.metric;
      rc.inner_budget = spec.inner_budget;
      rc.epochs = spec.epochs;
      rc.seed = jobs[j].seed;
      rc.f_star = result.f_star;
      try {
        traces[j] = solver_run(p, rc).trace;
        traces[j].name = spec.name;
      } catch (const std::exception& e) {
        errors[j] = std::string(e.what());
        if (errors[j].empty()) errors[j] = "unknown solver error";
      }
    }
  };
  const std::size_t n_workers =
      std::min<std::size_t>(std::max(threads, 1), std::max<std::size_t>(jobs.size(), 1));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  for (std::size_t j = 0; j < jobs.size(); ++j)
    if (!errors[j].empty())
      throw std::runtime_error("run " + cfg.runs[jobs[j].run].name + " seed " +
                               std::to_string(jobs[j].seed) + ": " + errors[j]);

  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const std::string name =
        cfg.runs[jobs[j].run].name + "_seed" + std::to_string(jobs[j].seed) + ".csv";
    std::ofstream out(fs::path(cfg.out_dir) / name);
    if (!out) throw std::runtime_error("cannot write " + name);
    write_trace_csv(out, traces[j]);
    result.files.push_back(name);
  }

  aggregate_series series;
  std::size_t j0 = 0;
  for (std::size_t r = 0; r < cfg.runs.size(); ++r) {
    const std::size_t count =
        static_cast<std::size_t>(cfg.runs[r].seed_hi - cfg.runs[r].seed_lo + 1);
    std::vector<run_trace> group(traces.begin() + static_cast<std::ptrdiff_t>(j0),
                                 traces.begin() + static_cast<std::ptrdiff_t>(j0 + count));
    series.push_back({cfg.runs[r].name, aggregate_traces(group)});
    j0 += count;
  }
  {
    std::ofstream out(fs::path(cfg.out_dir) / "aggregate.csv");
    if (!out) throw std::runtime_error("cannot write aggregate.csv");
    write_aggregate_csv(out, series);
    result.files.push_back("aggregate.csv");
  }

  if (cfg.plot) {
    std::vector<plot_series> ps;
    for (const auto& [name, rows] : series) {
      plot_series s;
      s.name = name;
      double g0 = rows.empty() ? 0.0 : rows.front().g_median;
      double running_min = std::numeric_limits<double>::infinity();
      for (const aggregate_row& row : rows) {
        double x = static_cast<double>(row.epoch);
        if (cfg.x_axis == x_axis_kind::weighted_epochs) x = row.weighted_median;
        else if (cfg.x_axis == x_axis_kind::time) x = row.wall_median;
        double y;
        if (result.convex) {
          y = row.rel_gap_median;
        } else {
          running_min = std::min(running_min, row.g_median);
          y = g0 > 0 ? running_min / g0 : 0.0;
        }
        s.x.push_back(x);
        s.y.push_back(y);
      }
      ps.push_back(std::move(s));
    }
    const std::string x_label = cfg.x_axis == x_axis_kind::epochs ? "epochs"
                                : cfg.x_axis == x_axis_kind::weighted_epochs ? "weighted epochs"
                                                                             : "wall time (ms)";
    const std::string y_label = result.convex ? "relative gap" : "min G ratio";
    std::ofstream out(fs::path(cfg.out_dir) / "plot.svg");
    if (!out) throw std::runtime_error("cannot write plot.svg");
    out << render_log_plot(ps, x_label, y_label);
    result.files.push_back("plot.svg");
  }
  return result;
}

struct report_entry {
  std::string label;
  bool reached = false;
  long long epochs_to_target = -1;
  double weighted_to_target = 0;
  double cost_ratio = std::numeric_limits<double>::quiet_NaN();
};

// Epochs until the median relative gap first reaches the target, per run in
// each aggregate; cost ratios are weighted-epoch counts relative to the first
// entry.
inline std::vector<report_entry> compare_entries(const std::vector<std::string>& paths,
                                                 double target) {
  if (paths.size() < 1) throw std::invalid_argument("report: at least one aggregate required");
  std::vector<report_entry> entries;
  for (const std::string& path : paths) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("report: cannot open " + path);
    const aggregate_series series = read_aggregate_csv(in);
    std::string stem = std::filesystem::path(path).stem().string();
    for (const auto& [name, rows] : series) {
      report_entry e;
      e.label = paths.size() > 1 ? stem + ":" + name : name;
      for (const aggregate_row& r : rows)
        if (r.rel_gap_median <= target) {
          e.reached = true;
          e.epochs_to_target = r.epoch;
          e.weighted_to_target = r.weighted_median;
          break;
        }
      entries.push_back(std::move(e));
    }
  }
  if (!entries.empty() && entries.front().reached) {
    const double base = entries.front().weighted_to_target;
    for (report_entry& e : entries)
      if (e.reached)
        e.cost_ratio = e.weighted_to_target == base ? 1.0 : (base > 0 ? e.weighted_to_target / base
                                                                      : std::numeric_limits<double>::quiet_NaN());
  }
  return entries;
}

inline std::string compare_report(const std::vector<std::string>& paths, double target) {
  const std::vector<report_entry> entries = compare_entries(paths, target);
  char buf[256];
  std::string out;
  std::snprintf(buf, sizeof(buf), "target rel_gap: %g\n", target);
  out += buf;
  std::snprintf(buf, sizeof(buf), "%-36s %12s %18s %12s\n", "method", "epochs", "weighted_epochs",
                "cost_ratio");
  out += buf;
  for (const report_entry& e : entries) {
    if (e.reached) {
      std::snprintf(buf, sizeof(buf), "%-36s %12lld %18.6g ", e.label.c_str(), e.epochs_to_target,
                    e.weighted_to_target);
      out += buf;
      if (std::isnan(e.cost_ratio)) out += "           -\n";
      else {
        std::snprintf(buf, sizeof(buf), "%12.4g\n", e.cost_ratio);
        out += buf;
      }
    } else {
      std::snprintf(buf, sizeof(buf), "%-36s %12s %18s %12s\n", e.label.c_str(), "not reached", "-",
                    "-");
      out += buf;
    }
  }
  return out;
}

}  // namespace vmbcd
