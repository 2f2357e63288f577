#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "settler/core/error.hpp"
#include "settler/core/fs.hpp"
#include "settler/io/csv.hpp"
#include "settler/io/manifest.hpp"
#include "settler/io/metrics.hpp"
#include "settler/io/plot.hpp"
#include "settler/io/preprocess.hpp"
#include "settler/io/trajectory_io.hpp"
#include "settler/mech/dataset.hpp"
#include "support.hpp"

using namespace settler;
using namespace settler::io;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

ErrorCategory category_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.category();
  }
  return ErrorCategory::reproducibility;
}

mech::TrajectoryDataset small_twin(std::size_t seconds, double noise = 0.0) {
  const SettlerConfig cfg;
  const std::vector<double> q(seconds, 0.45e-3);
  mech::DetectionModel det;
  det.enabled = true;
  return mech::simulate_trajectory(SettlerState(0.08, 0.04), q, mech::ValveLaw{}, mech::SaturatingSubmodel{},
                                   cfg, {noise, 0.0, 3}, det);
}

}  // namespace

TEST_CASE("csv round trip") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  CsvTable t;
  t.header = {"a", "b", "c"};
  for (int i = 0; i < 200; ++i) {
    t.rows.push_back({u(rng) * std::pow(10.0, i % 20 - 10), u(rng), i == 5 ? kNaN : u(rng) * 1e-7});
  }
  const auto back = parse_csv(format_csv(t));
  REQUIRE(back.header == t.header);
  REQUIRE(back.rows.size() == t.rows.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      const double a = t.rows[i][j], b = back.rows[i][j];
      if (std::isnan(a)) {
        CHECK(std::isnan(b));
      } else {
        CHECK(test::rel_err(a, b, 1e-300) < 1e-15);
      }
    }
  }
  const auto dir = test::scratch("io-csv");
  write_csv(dir / "t.csv", t);
  CHECK(format_csv(read_csv(dir / "t.csv")) == format_csv(t));
}

TEST_CASE("csv parse errors carry line numbers") {
  try {
    parse_csv("a,b\n1,2\n3\n", "x.csv");
    FAIL("expected parse error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::parse);
    CHECK(std::string(e.what()).find("x.csv:3") != std::string::npos);
  }
  CHECK(category_of([] { parse_csv("a,b\n1,zz\n"); }) == ErrorCategory::parse);
  CHECK(category_of([] { parse_csv(""); }) == ErrorCategory::parse);
  CHECK(category_of([] { parse_csv("a,b\n1,2\n").index("c"); }) == ErrorCategory::parse);
  CHECK(category_of([] { read_csv("/nonexistent/dir/x.csv"); }) == ErrorCategory::io);
  const auto t = parse_csv("a, b\r\n1, 2\r\n\n");
  CHECK(t.rows.size() == 1);
  CHECK(t.column("b") == std::vector<double>{2.0});
}

TEST_CASE("trajectory round trip keeps truth and detections") {
  const auto traj = small_twin(20, 0.002);
  const auto table = trajectory_table(traj);
  CHECK(table.find(col::true_h_dp).has_value());
  CHECK(table.find("h_4_3").has_value());
  const auto back = trajectory_from_table(parse_csv(format_csv(table)));
  REQUIRE(back.points.size() == traj.points.size());
  for (std::size_t k = 0; k < traj.points.size(); ++k) {
    CHECK(back.points[k].h_dp == traj.points[k].h_dp);
    CHECK(back.points[k].truth->h_hp == traj.points[k].truth->h_hp);
    CHECK(back.points[k].detections == traj.points[k].detections);
  }
  const auto no_truth = trajectory_from_table(trajectory_table(traj, false));
  CHECK_FALSE(no_truth.points[0].truth.has_value());
}

TEST_CASE("trajectory tau must increase") {
  auto table = trajectory_table(small_twin(5), false);
  table.rows[3][table.index(col::tau)] = table.rows[2][table.index(col::tau)];
  CHECK(category_of([&] { trajectory_from_table(table); }) == ErrorCategory::parse);
}

TEST_CASE("segment table round trip") {
  const auto data = mech::generate_pretrain_dataset(3, SettlerConfig{}, mech::SaturatingSubmodel{}, 1);
  const auto rows = sample_rows_from_table(parse_csv(format_csv(segment_table(data))));
  const auto ref = data.rows();
  REQUIRE(rows.size() == ref.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].t == ref[i].t);
    CHECK(rows[i].q_s == ref[i].q_s);
    CHECK(rows[i].has_internal);
  }
}

TEST_CASE("schedule files") {
  const auto dir = test::scratch("io-schedule");
  write_csv(dir / "s.csv", schedule_table(mech::campaign_schedule(4)));
  const auto back = read_schedule(dir / "s.csv");
  CHECK(mech::expand_schedule(back) == mech::expand_schedule(mech::campaign_schedule(4)));
}

TEST_CASE("preprocess linear midpoint") {
  CsvTable raw;
  raw.header = {"tau_s", "h_hp_m"};
  raw.rows = {{0.0, 0.05}, {2.0, 0.07}};
  const auto r = preprocess(raw);
  REQUIRE(r.table.rows.size() == 3);
  CHECK(r.table.column("h_hp_m")[1] == doctest::Approx(0.06).epsilon(1e-15));
  CHECK(r.table.column("tau_s") == std::vector<double>{0.0, 1.0, 2.0});
}

TEST_CASE("preprocess averages the detection positions") {
  CsvTable raw;
  raw.header = {"tau_s"};
  for (const auto& c : detection_columns()) raw.header.push_back(c);
  for (double t : {0.0, 1.0, 2.0}) {
    std::vector<double> row{t};
    for (std::size_t i = 0; i < 8; ++i) row.push_back(0.03 + 0.001 * t);
    raw.rows.push_back(row);
  }
  const auto same = preprocess(raw);
  CHECK(same.table.column("h_dp_m") == same.table.column("h_3_2"));

  CsvTable two;
  two.header = {"tau_s", "h_3_0", "h_3_1", "h_3_2"};
  two.rows = {{0.0, 0.04, 0.06, kNaN}, {1.0, 0.04, 0.06, kNaN}};
  const auto r = preprocess(two);
  CHECK(r.dropped == std::vector<std::string>{"h_3_2"});
  CHECK(r.table.column("h_dp_m")[0] == doctest::Approx(0.05).epsilon(1e-15));
  CHECK_FALSE(r.table.find("h_3_2").has_value());
}

TEST_CASE("preprocess flags bridged gaps") {
  CsvTable raw;
  raw.header = {"tau_s", "h_hp_m", "q_in_m3s"};
  raw.rows = {{0.0, 0.05, 1e-4}, {1.0, kNaN, 1e-4}, {2.0, kNaN, 1e-4}, {3.0, kNaN, 1e-4}, {4.0, 0.09, 1e-4}};
  const auto r = preprocess(raw);
  const auto gaps = r.table.column("gap_count");
  CHECK(gaps == std::vector<double>{0, 1, 1, 1, 0});
  CHECK(r.flagged_points == 3);
  CHECK(r.table.column("h_hp_m")[2] == doctest::Approx(0.07).epsilon(1e-14));

  CsvTable irregular;
  irregular.header = {"tau_s", "h_hp_m"};
  irregular.rows = {{0.4, 0.05}, {1.5, 0.06}, {2.2, 0.065}};
  const auto g = preprocess(irregular);
  CHECK(g.table.column("tau_s") == std::vector<double>{1.0, 2.0});

  CsvTable back;
  back.header = {"tau_s", "h_hp_m"};
  back.rows = {{1.0, 0.05}, {0.0, 0.06}};
  CHECK(category_of([&] { preprocess(back); }) == ErrorCategory::parse);
}

TEST_CASE("preprocess is idempotent on regular input") {
  const auto table = trajectory_table(small_twin(30, 0.002));
  const auto once = preprocess(table).table;
  const auto twice = preprocess(once).table;
  CHECK(format_csv(once) == format_csv(twice));
  for (const auto& name : {col::h_dp, col::true_h_hp}) CHECK(once.column(name) == table.column(name));
}

TEST_CASE("variable metrics") {
  const std::vector<double> tau{0, 1, 2, 3, 4};
  const std::vector<double> truth{0.05, 0.05, 0.05, 0.05, 0.05};
  const auto zero = variable_metrics("h", tau, truth, truth, 0.005);
  CHECK(zero.rmse == 0.0);
  CHECK(zero.max_abs == 0.0);
  CHECK(zero.convergence_time == 0.0);

  const std::vector<double> pred{0.07, 0.06, 0.052, 0.06, 0.051};
  const auto m = variable_metrics("h", tau, pred, truth, 0.005);
  CHECK(m.max_abs == doctest::Approx(0.02));
  CHECK(m.rmse == doctest::Approx(std::sqrt((4e-4 + 1e-4 + 4e-6 + 1e-4 + 1e-6) / 5.0)));
  CHECK(m.convergence_time == 4.0);
  CHECK(m.first_entry == 2u);
  CHECK(m.fraction_within_after_entry == doctest::Approx(2.0 / 3.0));

  const std::vector<double> far{0.1, 0.1, 0.1, 0.1, 0.1};
  const auto never = variable_metrics("h", tau, far, truth, 0.005);
  CHECK_FALSE(never.convergence_time.has_value());
  MetricsReport rep;
  SeriesMetrics s;
  s.variables.push_back(never);
  rep.mean = s;
  CHECK(rep.to_json().dump().find("never") != std::string::npos);
}

TEST_CASE("evaluate_tables against truth columns") {
  const auto truth = trajectory_table(small_twin(15));
  CsvTable pred;
  pred.header = {"member", "tau_s", "h_hp_m", "h_dp_m"};
  const auto tau = truth.column(col::tau);
  const auto hp = truth.column(col::true_h_hp), dp = truth.column(col::true_h_dp);
  for (int member : {0, -1}) {
    for (std::size_t k = 0; k < tau.size(); ++k) pred.rows.push_back({double(member), tau[k], hp[k], dp[k]});
  }
  const auto rep = evaluate_tables(pred, truth);
  REQUIRE(rep.mean.has_value());
  CHECK(rep.mean->find("h_dp_m")->rmse == 0.0);
  REQUIRE(rep.members.size() == 1);
  CHECK(rep.members[0].find("h_hp_m")->rmse == 0.0);
  CHECK(rep.horizon == tau.back() - tau.front());
  CHECK(rep.to_json().at("schema") == "settler-metrics/1");

  pred.rows.push_back({-1.0, 999.0, 0.0, 0.0});
  CHECK(category_of([&] { evaluate_tables(pred, truth); }) == ErrorCategory::parse);
}

TEST_CASE("manifest round trip and hashing") {
  const auto dir = test::scratch("io-manifest");
  write_file_atomic(dir / "a.csv", std::string_view("x\n1\n"));
  std::filesystem::create_directories(dir / "sub");
  write_file_atomic(dir / "sub" / "b.csv", std::string_view("y\n2\n"));
  Manifest m;
  m.version = "1.0.0";
  m.argv = {"settler", "generate-data", "--out", dir.string()};
  m.out_arg = dir.string();
  m.out_is_dir = true;
  m.config_text = "[a]\nb = 1\n";
  m.config_sha256 = sha256_hex(m.config_text);
  m.seeds = {{"seed", 4}};
  m.isa = "scalar";
  m.threads = 2;
  m.outputs = hash_outputs(dir, {dir / "a.csv", dir / "sub" / "b.csv"});
  REQUIRE(m.outputs.size() == 2);
  CHECK(m.outputs[1].path == "sub/b.csv");
  CHECK(m.outputs[0].sha256 == sha256_hex("x\n1\n"));
  const auto loc = Manifest::location(dir, true);
  CHECK(loc == dir / "manifest.json");
  CHECK(Manifest::location(dir / "e.csv", false) == dir / "e.csv.manifest.json");
  write_manifest(loc, m);
  const auto back = read_manifest(loc);
  CHECK(back.to_json() == m.to_json());
  CHECK(back.out_base() == dir);
  auto bad = m.to_json();
  bad["schema"] = "other/9";
  CHECK(category_of([&] { Manifest::from_json(bad); }) == ErrorCategory::parse);
}

TEST_CASE("figure table and svg") {
  Figure f;
  f.title = "h_dp_m";
  f.series.push_back({"member 0", LineStyle::member, {0, 1, 2}, {0.04, 0.041, 0.042}});
  f.series.push_back({"mean", LineStyle::mean, {0, 1, 2}, {0.04, kNaN, 0.043}});
  f.series.push_back({"truth", LineStyle::truth, {0, 2, 3}, {0.039, 0.04, 0.041}});
  const auto t = figure_table(f);
  CHECK(t.column("tau_s") == std::vector<double>{0, 1, 2, 3});
  CHECK(std::isnan(t.column("member 0")[3]));
  const auto svg = render_svg(f);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  CHECK(svg.find("stroke-dasharray") != std::string::npos);
  CHECK(svg.find("polyline") != std::string::npos);
}

TEST_CASE("plot_run writes one figure per variable") {
  const auto dir = test::scratch("io-plot");
  CsvTable pred;
  pred.header = {"member", "tau_s", "h_hp_m", "h_dp_m", "true_h_hp_m", "true_h_dp_m"};
  for (int member : {0, 1, -1}) {
    for (int k = 0; k < 5; ++k) pred.rows.push_back({double(member), double(k), 0.08, 0.04 + 0.001 * member, 0.08, 0.04});
  }
  write_csv(dir / "run" / "est.csv", pred);
  const auto files = plot_run(dir / "run", dir / "plots");
  CHECK(files.size() == 4);
  CHECK(std::filesystem::exists(dir / "plots" / "est_h_dp_m.svg"));
  const auto t = read_csv(dir / "plots" / "est_h_dp_m.csv");
  CHECK(t.header.size() == 5);
}
