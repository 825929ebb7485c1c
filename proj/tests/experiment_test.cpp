#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <gtest/gtest.h>

#include "test_util.hpp"

namespace {

using namespace vmbcd;
namespace fs = std::filesystem;
using test_util::read_file;
using test_util::strip_last_fields;

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("vmbcd_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const char* kBasicConfig =
    "# synthetic group problem\n"
    "problem = synthetic\n"
    "rows = 30\n"
    "cols = 12\n"
    "block_size = 2\n"
    "loss = squared\n"
    "c = 0.5\n"
    "reg = group_l2\n"
    "lambda = 0.05\n"
    "noise_sigma = 0.02\n"
    "synth_seed = 4\n"
    "plot = true\n"
    "\n"
    "[run]\n"
    "algorithm = vm-bcd\n"
    "t = 5\n"
    "epochs = 6\n"
    "seeds = 3\n"
    "\n"
    "[run]\n"
    "algorithm = rcd-unit\n"
    "sampler = lipschitz\n"
    "epochs = 6\n"
    "seeds = 2..4\n";

TEST(config, parses_global_and_run_sections) {
  std::istringstream in(kBasicConfig);
  const experiment_config cfg = parse_experiment_config(in);
  EXPECT_FALSE(cfg.use_dataset);
  EXPECT_EQ(cfg.synth.rows, 30);
  EXPECT_EQ(cfg.synth.cols, 12);
  EXPECT_EQ(cfg.synth.block_size, 2);
  EXPECT_EQ(cfg.synth.seed, 4u);
  EXPECT_EQ(cfg.loss.kind, loss_kind::squared);
  EXPECT_DOUBLE_EQ(cfg.loss.c, 0.5);
  EXPECT_EQ(cfg.reg.kind, reg_kind::group_l2);
  EXPECT_DOUBLE_EQ(cfg.reg.weight, 0.05);
  ASSERT_EQ(cfg.runs.size(), 2u);
  EXPECT_EQ(cfg.runs[0].algorithm, algorithm_kind::vm_bcd);
  EXPECT_EQ(cfg.runs[0].inner_budget, 5);
  EXPECT_EQ(cfg.runs[0].epochs, 6);
  EXPECT_EQ(cfg.runs[0].seed_lo, 1u);
  EXPECT_EQ(cfg.runs[0].seed_hi, 3u);
  EXPECT_EQ(cfg.runs[0].name, "vm-5-uniform");
  EXPECT_EQ(cfg.runs[1].algorithm, algorithm_kind::rcd_unit);
  EXPECT_EQ(cfg.runs[1].sampler, sampler_kind::lipschitz);
  EXPECT_EQ(cfg.runs[1].seed_lo, 2u);
  EXPECT_EQ(cfg.runs[1].seed_hi, 4u);
  EXPECT_EQ(cfg.runs[1].name, "rcd-unit-lipschitz");
}

TEST(config, names_are_sanitized_and_deduplicated) {
  std::istringstream in(
      "rows = 5\ncols = 4\n"
      "[run]\nname = My Run #1!\nepochs = 2\n"  // comment strips from '#'
      "[run]\nname = my-run\nepochs = 2\n"
      "[run]\nname = my-run\nepochs = 2\n");
  const experiment_config cfg = parse_experiment_config(in);
  ASSERT_EQ(cfg.runs.size(), 3u);
  EXPECT_EQ(cfg.runs[0].name, "my-run");
  EXPECT_EQ(cfg.runs[1].name, "my-run-2");
  EXPECT_EQ(cfg.runs[2].name, "my-run-3");
}

TEST(config, fixed_metric_default_name) {
  std::istringstream in(
      "rows = 5\ncols = 4\n"
      "[run]\nalgorithm = vm-bcd\nmetric = fixed\nt = 10\nepochs = 2\n"
      "[run]\nalgorithm = fista\nepochs = 2\n");
  const experiment_config cfg = parse_experiment_config(in);
  EXPECT_EQ(cfg.runs[0].name, "fm-10-uniform");
  EXPECT_EQ(cfg.runs[1].name, "fista");
}

TEST(config, rejects_malformed_input) {
  auto expect_bad = [](const char* text) {
    std::istringstream in(text);
    EXPECT_THROW(parse_experiment_config(in), std::invalid_argument) << text;
  };
  expect_bad("nonsense_key = 1\n[run]\nepochs = 2\n");
  expect_bad("[run]\nbogus = 1\n");
  expect_bad("[run]\nepochs = 0\n");
  expect_bad("rows = 5\ncols = 4\n");  // no [run] section
  expect_bad("loss = cubic\n[run]\nepochs = 2\n");
  expect_bad("reg = l0\n[run]\nepochs = 2\n");
  expect_bad("this line has no equals\n[run]\nepochs = 2\n");
  expect_bad("c =\n[run]\nepochs = 2\n");
  expect_bad("c = -1\n[run]\nepochs = 2\n");
  expect_bad("[run]\nseeds = 7..3\n");
  expect_bad("[run]\nalgorithm = sgd\n");
  expect_bad("problem = dataset\n[run]\nepochs = 2\n");  // missing dataset path
  expect_bad("loss = biweight\n[run]\nalgorithm = fista\nepochs = 2\n");
}

TEST(config, x_axis_values) {
  for (const auto& [text, want] :
       std::initializer_list<std::pair<const char*, x_axis_kind>>{
           {"epochs", x_axis_kind::epochs},
           {"weighted-epochs", x_axis_kind::weighted_epochs},
           {"time", x_axis_kind::time}}) {
    std::istringstream in(std::string("rows = 5\ncols = 4\nx_axis = ") + text +
                          "\n[run]\nepochs = 2\n");
    EXPECT_EQ(parse_experiment_config(in).x_axis, want);
  }
  std::istringstream in("x_axis = iterations\n[run]\nepochs = 2\n");
  EXPECT_THROW(parse_experiment_config(in), std::invalid_argument);
}

TEST(aggregate, mean_and_median_are_exact) {
  run_trace a, b, c;
  a.name = b.name = c.name = "r";
  for (double v : {1.0, 2.0, 6.0}) {
    trace_record t;
    t.epoch = 0;
    t.f = v;
    t.rel_gap = v / 10;
    t.g_norm_sq = v * v;
    t.mean_alpha = 1.0;
    t.sparsity = 0.5;
    t.weighted_epoch = v;
    t.wall_ms = v;
    (v == 1.0 ? a : v == 2.0 ? b : c).records.push_back(t);
  }
  const std::vector<aggregate_row> rows = aggregate_traces({a, b, c});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_DOUBLE_EQ(rows[0].f_mean, 3.0);
  EXPECT_DOUBLE_EQ(rows[0].f_median, 2.0);
  EXPECT_DOUBLE_EQ(rows[0].rel_gap_mean, 0.3);
  EXPECT_DOUBLE_EQ(rows[0].g_median, 4.0);
  EXPECT_DOUBLE_EQ(rows[0].weighted_median, 2.0);
}

TEST(aggregate, truncates_to_shortest_trace) {
  run_trace a, b;
  for (int e = 0; e < 5; ++e) {
    trace_record t;
    t.epoch = e;
    t.f = e;
    a.records.push_back(t);
    if (e < 3) b.records.push_back(t);
  }
  EXPECT_EQ(aggregate_traces({a, b}).size(), 3u);
}

TEST(aggregate, csv_round_trip) {
  run_trace a;
  for (int e = 0; e < 4; ++e) {
    trace_record t;
    t.epoch = e;
    t.f = 1.0 / (e + 3.0);
    t.rel_gap = std::pow(0.1, e);
    t.g_norm_sq = 1e-7 * (e + 1);
    t.mean_alpha = 0.45;
    t.sparsity = 0.25;
    t.weighted_epoch = e * 1.0000000001;
    t.wall_ms = 12.5 * e;
    a.records.push_back(t);
  }
  aggregate_series series = {{"solo", aggregate_traces({a})}};
  std::ostringstream out;
  write_aggregate_csv(out, series);
  EXPECT_EQ(out.str().substr(0, std::string(aggregate_csv_header()).size()),
            aggregate_csv_header());
  std::istringstream in(out.str());
  const aggregate_series back = read_aggregate_csv(in);
  ASSERT_EQ(back.size(), 1u);
  EXPECT_EQ(back[0].first, "solo");
  ASSERT_EQ(back[0].second.size(), 4u);
  for (std::size_t e = 0; e < 4; ++e) {
    EXPECT_EQ(back[0].second[e].epoch, series[0].second[e].epoch);
    EXPECT_EQ(back[0].second[e].f_mean, series[0].second[e].f_mean);
    EXPECT_EQ(back[0].second[e].rel_gap_median, series[0].second[e].rel_gap_median);
    EXPECT_EQ(back[0].second[e].weighted_mean, series[0].second[e].weighted_mean);
  }
  std::istringstream bad("not,a,header\n");
  EXPECT_THROW(read_aggregate_csv(bad), std::runtime_error);
}

TEST(experiment, writes_expected_files) {
  std::istringstream in(kBasicConfig);
  experiment_config cfg = parse_experiment_config(in);
  const fs::path dir = fresh_dir("files");
  cfg.out_dir = dir.string();
  const experiment_result res = run_experiment(cfg);
  EXPECT_TRUE(res.convex);
  EXPECT_TRUE(std::isfinite(res.f_star));
  // 3 + 3 trace files, one aggregate, one plot
  EXPECT_EQ(res.files.size(), 8u);
  for (const std::string& f : res.files) EXPECT_TRUE(fs::exists(dir / f)) << f;
  EXPECT_TRUE(fs::exists(dir / "vm-5-uniform_seed1.csv"));
  EXPECT_TRUE(fs::exists(dir / "rcd-unit-lipschitz_seed4.csv"));
  EXPECT_TRUE(fs::exists(dir / "aggregate.csv"));
  EXPECT_TRUE(fs::exists(dir / "plot.svg"));
  const std::string trace = read_file((dir / "vm-5-uniform_seed1.csv").string());
  EXPECT_EQ(trace.substr(0, std::string(trace_csv_header()).size()), trace_csv_header());
  const std::string svg = read_file((dir / "plot.svg").string());
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("vm-5-uniform"), std::string::npos);
  EXPECT_NE(svg.find("relative gap"), std::string::npos);
  fs::remove_all(dir);
}

TEST(experiment, outputs_are_deterministic_modulo_wall_time) {
  std::istringstream in1(kBasicConfig), in2(kBasicConfig);
  experiment_config c1 = parse_experiment_config(in1);
  experiment_config c2 = parse_experiment_config(in2);
  const fs::path d1 = fresh_dir("det1"), d2 = fresh_dir("det2");
  c1.out_dir = d1.string();
  c2.out_dir = d2.string();
  const experiment_result r1 = run_experiment(c1);
  const experiment_result r2 = run_experiment(c2, 2);  // thread count must not matter
  ASSERT_EQ(r1.files, r2.files);
  EXPECT_EQ(r1.f_star, r2.f_star);
  for (const std::string& f : r1.files) {
    const std::string a = read_file((d1 / f).string());
    const std::string b = read_file((d2 / f).string());
    if (f == "plot.svg") {
      EXPECT_EQ(a, b);  // epoch axis and gap values carry no wall time
    } else if (f == "aggregate.csv") {
      EXPECT_EQ(strip_last_fields(a, 2), strip_last_fields(b, 2)) << f;
    } else {
      EXPECT_EQ(strip_last_fields(a, 1), strip_last_fields(b, 1)) << f;
    }
  }
  fs::remove_all(d1);
  fs::remove_all(d2);
}

TEST(experiment, nonconvex_runs_report_stationarity) {
  std::istringstream in(
      "rows = 25\ncols = 10\nloss = biweight\nc = 1\nreg = l1\nlambda = 0.05\n"
      "[run]\nalgorithm = vm-bcd\nepochs = 5\nseeds = 2\n");
  experiment_config cfg = parse_experiment_config(in);
  const fs::path dir = fresh_dir("ncvx");
  cfg.out_dir = dir.string();
  const experiment_result res = run_experiment(cfg);
  EXPECT_FALSE(res.convex);
  EXPECT_TRUE(std::isnan(res.f_star));
  const std::string svg = read_file((dir / "plot.svg").string());
  EXPECT_NE(svg.find("min G ratio"), std::string::npos);
  fs::remove_all(dir);
}

TEST(experiment, seed_offset_shifts_trace_seeds) {
  std::istringstream in(
      "rows = 12\ncols = 6\n[run]\nalgorithm = rcd-unit\nepochs = 3\nseeds = 2\n");
  experiment_config cfg = parse_experiment_config(in);
  const fs::path dir = fresh_dir("offset");
  cfg.out_dir = dir.string();
  const experiment_result res = run_experiment(cfg, 1, 100);
  EXPECT_TRUE(fs::exists(dir / "rcd-unit-uniform_seed101.csv"));
  EXPECT_TRUE(fs::exists(dir / "rcd-unit-uniform_seed102.csv"));
  EXPECT_EQ(res.files.size(), 4u);
  fs::remove_all(dir);
}

TEST(report, cost_ratio_against_first_entry) {
  std::istringstream in(
      "rows = 30\ncols = 12\nloss = squared\nreg = l1\nlambda = 0.1\n"
      "[run]\nalgorithm = vm-bcd\nt = 10\nepochs = 40\nseeds = 2\n"
      "[run]\nalgorithm = rcd-unit\nepochs = 40\nseeds = 2\n");
  experiment_config cfg = parse_experiment_config(in);
  const fs::path dir = fresh_dir("report");
  cfg.out_dir = dir.string();
  cfg.plot = false;
  run_experiment(cfg);
  const std::string agg = (dir / "aggregate.csv").string();
  const std::vector<report_entry> entries = compare_entries({agg}, 1e-4);
  ASSERT_EQ(entries.size(), 2u);
  EXPECT_EQ(entries[0].label, "vm-10-uniform");
  ASSERT_TRUE(entries[0].reached);
  EXPECT_DOUBLE_EQ(entries[0].cost_ratio, 1.0);
  if (entries[1].reached) EXPECT_GT(entries[1].cost_ratio, 0.0);
  // an unreachable target renders a "not reached" row, not an error
  const std::string report = compare_report({agg}, 1e-30);
  EXPECT_NE(report.find("not reached"), std::string::npos);
  // two files qualify labels with the file stem
  const std::vector<report_entry> two = compare_entries({agg, agg}, 1e-4);
  ASSERT_EQ(two.size(), 4u);
  EXPECT_EQ(two[0].label, "aggregate:vm-10-uniform");
  fs::remove_all(dir);
}

TEST(dataset_path, resolves_against_environment_root) {
  EXPECT_EQ(resolve_dataset_path("/abs/path.svm"), "/abs/path.svm");
  unsetenv("VMBCD_DATA_ROOT");
  EXPECT_EQ(resolve_dataset_path("rel.svm"), "rel.svm");
  setenv("VMBCD_DATA_ROOT", "/data/root", 1);
  EXPECT_EQ(resolve_dataset_path("rel.svm"), "/data/root/rel.svm");
  EXPECT_EQ(resolve_dataset_path("/abs/path.svm"), "/abs/path.svm");
  unsetenv("VMBCD_DATA_ROOT");
}

TEST(dataset_problem, loads_libsvm_file_with_bias) {
  const fs::path dir = fresh_dir("data");
  const fs::path file = dir / "tiny.svm";
  {
    std::ofstream out(file);
    out << "1 1:0.5 2:1\n-1 1:-0.25\n1 2:2\n";
  }
  std::istringstream in(std::string("problem = dataset\ndataset = ") + file.string() +
                        "\nbias = true\nloss = squared_hinge\nc = 1\nreg = l1\nlambda = 0.01\n"
                        "[run]\nalgorithm = rcd-unit\nepochs = 3\n");
  experiment_config cfg = parse_experiment_config(in);
  const composite_problem p = build_problem(cfg);
  EXPECT_EQ(p.data.a.rows(), 3);
  EXPECT_EQ(p.data.a.cols(), 3);  // two features plus the bias column
  const matrix_t dense = p.data.a.to_dense();
  for (index_t r = 0; r < 3; ++r) EXPECT_EQ(dense(r, 2), 1.0);
  cfg.out_dir = (dir / "out").string();
  cfg.plot = false;
  const experiment_result res = run_experiment(cfg);
  EXPECT_EQ(res.files.size(), 2u);
  fs::remove_all(dir);
}

TEST(dataset_problem, missing_file_is_an_error) {
  std::istringstream in(
      "problem = dataset\ndataset = /nonexistent/path.svm\n[run]\nepochs = 2\n");
  experiment_config cfg = parse_experiment_config(in);
  EXPECT_THROW(build_problem(cfg), std::runtime_error);
}

TEST(plot, log_scale_svg_structure) {
  plot_series s1{"alpha", {0, 1, 2, 3}, {1.0, 0.1, 0.01, 0.001}};
  plot_series s2{"beta", {0, 1, 2, 3}, {1.0, 0.5, 0.0, 0.25}};  // zero skipped on log axis
  const std::string svg = render_log_plot({s1, s2}, "epochs", "relative gap");
  EXPECT_NE(svg.find("<svg"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
  EXPECT_NE(svg.find("alpha"), std::string::npos);
  EXPECT_NE(svg.find("beta"), std::string::npos);
  EXPECT_NE(svg.find("1e-3"), std::string::npos);
  EXPECT_NE(svg.find("polyline"), std::string::npos);
}

}  // namespace
