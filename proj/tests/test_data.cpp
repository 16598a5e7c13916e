#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>

#include "adkrr/data.hpp"
#include "test_util.hpp"

using namespace adkrr;
namespace fs = std::filesystem;

namespace {

struct ScratchDir {
  fs::path path;
  ScratchDir() {
    path = fs::temp_directory_path() /
           ("adkrr-test-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~ScratchDir() { fs::remove_all(path); }
  static int& counter() {
    static int n = 0;
    return n;
  }
  std::string file(const std::string& name, const std::string& text) const {
    const fs::path p = path / name;
    std::ofstream out(p, std::ios::binary);
    out << text;
    return p.string();
  }
};

Eigen::VectorXd point(double a, double b, double c) {
  Eigen::VectorXd x(3);
  x << a, b, c;
  return x;
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("target point values") {
  CHECK(eval_target(TargetKind::G1, point(0, 0, 0)) == 3.0);
  CHECK(eval_target(TargetKind::G1, point(0.5, 0, 0)) == 0.32421875);
  CHECK(eval_target(TargetKind::G1, point(1.2, 0, 0)) == 0.0);
  CHECK(eval_target(TargetKind::G2, point(0, 0, 0)) == -6.0);
  CHECK(eval_target(TargetKind::G2, point(2, 0, 0)) == 0.0);
  CHECK(eval_target(TargetKind::G2, point(0.5, 0, 0)) == -1.875);
}

TEST_CASE("compact target vanishes smoothly at the boundary") {
  for (int i = 0; i <= 200; ++i) {
    const double r = 1.0 - 1e-2 + i * (1e-2 / 200.0);
    CHECK(std::abs(eval_target(TargetKind::G1, point(r, 0, 0))) <= 1e-6);
  }
}

TEST_CASE("batch evaluation matches the point form") {
  const Eigen::MatrixXd pts = 2.0 * testutil::uniform_matrix(20, 3, 3);
  const Eigen::VectorXd batch = eval_targets(TargetKind::G2, pts);
  for (Eigen::Index i = 0; i < 20; ++i) {
    CHECK(batch[i] == eval_target(TargetKind::G2, pts.row(i).transpose()));
  }
}

TEST_CASE("synthetic generation") {
  const SyntheticSample a = gen_synthetic(TargetKind::G1, 50, 3, 0.2, 7);
  const SyntheticSample b = gen_synthetic(TargetKind::G1, 50, 3, 0.2, 7);
  CHECK((a.data.inputs - b.data.inputs).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.data.outputs - b.data.outputs).cwiseAbs().maxCoeff() == 0.0);

  CHECK((a.data.inputs.array() >= 0.0).all());
  CHECK((a.data.inputs.array() < 1.0).all());

  const SyntheticSample clean = gen_synthetic(TargetKind::G1, 50, 3, 0.0, 7);
  CHECK((clean.data.outputs - clean.clean).cwiseAbs().maxCoeff() == 0.0);
  CHECK(testutil::max_abs_diff(clean.clean,
                               eval_targets(TargetKind::G1,
                                            clean.data.inputs)) == 0.0);

  CHECK_THROWS_AS(gen_synthetic(TargetKind::G1, 0, 3, 0.1, 1), DomainError);
  CHECK_THROWS_AS(gen_synthetic(TargetKind::G1, 5, 3, -0.1, 1), DomainError);
}

TEST_CASE("noise variance lands near its nominal value") {
  const SyntheticSample s = gen_synthetic(TargetKind::G1, 100000, 3, 0.2, 11);
  const Eigen::VectorXd noise = s.data.outputs - s.clean;
  const double mean = noise.mean();
  const double var =
      (noise.array() - mean).square().sum() / (noise.size() - 1.0);
  CHECK(var >= 0.036);
  CHECK(var <= 0.044);
}

TEST_CASE("min-max normalization") {
  Eigen::MatrixXd train(3, 1);
  train << 2.0, 4.0, 6.0;
  const MinMaxScaler scaler = fit_minmax(train);
  const Eigen::MatrixXd scaled = apply_minmax(scaler, train, false);
  CHECK(scaled(0, 0) == 0.0);
  CHECK(scaled(1, 0) == 0.5);
  CHECK(scaled(2, 0) == 1.0);

  Eigen::MatrixXd test(2, 1);
  test << 8.0, 1.0;
  const Eigen::MatrixXd clamped = apply_minmax(scaler, test, true);
  CHECK(clamped(0, 0) == 1.0);
  CHECK(clamped(1, 0) == 0.0);
  const Eigen::MatrixXd raw = apply_minmax(scaler, test, false);
  CHECK(raw(0, 0) == 1.5);
  CHECK(raw(1, 0) == -0.25);

  Eigen::MatrixXd unit(3, 1);
  unit << 0.0, 0.25, 1.0;
  const Eigen::MatrixXd same = apply_minmax(fit_minmax(unit), unit, false);
  CHECK((same.array() == unit.array()).all());

  Eigen::MatrixXd constant(3, 2);
  constant << 1.0, 5.0, 2.0, 5.0, 3.0, 5.0;
  CHECK_THROWS_WITH_AS(fit_minmax(constant),
                       doctest::Contains("column 1"), DomainError);
}

TEST_CASE("fit and apply in one step") {
  const Eigen::MatrixXd train = 3.0 * testutil::uniform_matrix(30, 2, 13);
  const Eigen::MatrixXd test =
      (4.0 * testutil::uniform_matrix(10, 2, 14).array() - 0.5).matrix();
  const auto [train_norm, test_norm] = fit_apply_minmax(train, test);
  CHECK(train_norm.minCoeff() == 0.0);
  CHECK(train_norm.maxCoeff() == 1.0);
  CHECK((test_norm.array() >= 0.0).all());
  CHECK((test_norm.array() <= 1.0).all());

  // idempotent on the training side
  const auto [twice, ignored] = fit_apply_minmax(train_norm, test_norm);
  CHECK((twice - train_norm).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("usage-time bins") {
  const BinSpec bins = usage_time_bins();
  CHECK(bins.bin_count() == 10);
  Eigen::VectorXd values(6);
  values << 90.0, 100.0, 6000.0, 0.0, 3650.0, 5476.0;
  const Eigen::VectorXd labels = bin_column(values, bins);
  CHECK(labels[0] == 0.0);
  CHECK(labels[1] == 1.0);
  CHECK(labels[2] == 9.0);
  CHECK(labels[3] == 0.0);
  CHECK(labels[4] == 7.0);
  CHECK(labels[5] == 9.0);

  Eigen::VectorXd below(1);
  below << -0.5;
  CHECK_THROWS_WITH_AS(bin_column(below, bins), doctest::Contains("row 0"),
                       DomainError);
}

TEST_CASE("power bins") {
  const BinSpec bins = power_bins();
  CHECK(bins.bin_count() == 10);
  CHECK_FALSE(bins.unbounded_last);
  Eigen::VectorXd values(3);
  values << -19.3, 19312.0, 0.0;
  const Eigen::VectorXd labels = bin_column(values, bins);
  CHECK(labels[0] == 0.0);
  CHECK(labels[1] == 9.0);
  CHECK(labels[2] == 0.0);

  Eigen::VectorXd above(1);
  above << 19313.0;
  CHECK_THROWS_AS(bin_column(above, bins), DomainError);
}

TEST_CASE("binning totality and custom labels") {
  std::mt19937_64 eng(15);
  Eigen::VectorXd values(500);
  for (Eigen::Index i = 0; i < 500; ++i) {
    values[i] = rng::uniform01(eng) * 7000.0;
  }
  const Eigen::VectorXd labels = bin_column(values, usage_time_bins());
  CHECK((labels.array() >= 0.0).all());
  CHECK((labels.array() <= 9.0).all());

  BinSpec spec;
  spec.edges = {0.0, 1.0, 2.0};
  Eigen::VectorXd small(2);
  small << 0.5, 1.5;
  const Eigen::VectorXd named = bin_column(small, spec, {10.0, 20.0});
  CHECK(named[0] == 10.0);
  CHECK(named[1] == 20.0);
  CHECK_THROWS_AS(bin_column(small, spec, {10.0}), ShapeError);
}

TEST_CASE("log target") {
  Eigen::VectorXd v(2);
  v << 1.0, std::exp(1.0);
  const Eigen::VectorXd logged = log_target(v);
  CHECK(logged[0] == 0.0);
  CHECK(std::abs(logged[1] - 1.0) <= 1e-15);

  const Eigen::VectorXd values = 5.0 * testutil::uniform_matrix(40, 1, 16);
  const Eigen::VectorXd positive = (values.array() + 0.1).matrix();
  const Eigen::VectorXd round_trip =
      log_target(positive).array().exp().matrix();
  CHECK(testutil::max_abs_diff(round_trip, positive) <= 1e-12);

  Eigen::VectorXd bad(2);
  bad << 1.0, 0.0;
  CHECK_THROWS_WITH_AS(log_target(bad), doctest::Contains("row 1"),
                       DomainError);
}

TEST_CASE("csv loading") {
  ScratchDir dir;
  const CsvSchema schema{{0}, {1, 2}};

  const std::string with_header =
      dir.file("h.csv", "a,b,c\n1,2,3\n4,5,6\n");
  const DataSet ds = load_csv(with_header, schema);
  REQUIRE(ds.size() == 2);
  CHECK(ds.inputs(0, 0) == 1.0);
  CHECK(ds.inputs(1, 0) == 4.0);
  CHECK(ds.outputs[0] == 2.5);  // averaged target columns
  CHECK(ds.outputs[1] == 5.5);

  const std::string headerless = dir.file("n.csv", "1,2,3\n4,5,6\n");
  const DataSet ds2 = load_csv(headerless, schema);
  CHECK(ds2.size() == 2);
  CHECK(ds2.outputs[0] == 2.5);

  const std::string only_header = dir.file("o.csv", "a,b,c\n");
  CHECK_THROWS_WITH_AS(load_csv(only_header, schema),
                       doctest::Contains("no data rows"), ParseError);

  const std::string bad_cell = dir.file("bad.csv", "1,2,3\n4,x,6\n");
  CHECK_THROWS_WITH_AS(load_csv(bad_cell, schema),
                       doctest::Contains("column 1"), ParseError);

  CHECK_THROWS_AS(load_csv((dir.path / "absent.csv").string(), schema),
                  IoError);

  const CsvSchema no_inputs{{}, {1}};
  CHECK_THROWS_AS(load_csv(with_header, no_inputs), ConfigError);
}

TEST_CASE("preprocess document") {
  ScratchDir dir;
  const std::string doc_path = dir.file("schema.json", R"({
    "inputs": [0, 1, 2],
    "targets": [3],
    "minmax": true,
    "log_target": true,
    "bins": [
      {"column": 1, "preset": "usage-time"},
      {"column": 2, "edges": [0.0, 10.0, 20.0]}
    ]
  })");
  const PreprocessDoc doc = load_preprocess_doc(doc_path);
  const std::vector<Eigen::Index> want_inputs{0, 1, 2};
  const std::vector<Eigen::Index> want_targets{3};
  CHECK(doc.schema.input_columns == want_inputs);
  CHECK(doc.schema.target_columns == want_targets);
  CHECK(doc.minmax);
  CHECK(doc.log_target);
  REQUIRE(doc.bins.size() == 2);
  CHECK(doc.bins[0].column == 1);
  CHECK(doc.bins[0].spec.bin_count() == 10);
  CHECK(doc.bins[0].spec.unbounded_last);
  CHECK(doc.bins[1].spec.bin_count() == 2);

  const std::string bad = dir.file("bad.json", "{nope");
  CHECK_THROWS_AS(load_preprocess_doc(bad), ParseError);

  const std::string unknown = dir.file("unknown.json", R"({
    "inputs": [0], "targets": [1],
    "bins": [{"column": 0, "preset": "mystery"}]
  })");
  CHECK_THROWS_AS(load_preprocess_doc(unknown), ConfigError);

  const std::string out_of_range = dir.file("oor.json", R"({
    "inputs": [0], "targets": [1],
    "bins": [{"column": 3, "edges": [0.0, 1.0]}]
  })");
  CHECK_THROWS_AS(load_preprocess_doc(out_of_range), ConfigError);
}

TEST_CASE("dataset pipeline") {
  ScratchDir dir;
  const std::string schema_path = dir.file("schema.json", R"({
    "inputs": [0, 1],
    "targets": [2],
    "log_target": true,
    "bins": [{"column": 1, "edges": [0.0, 100.0, 200.0]}]
  })");
  const std::string csv_path = dir.file("data.csv",
                                        "x,days,y\n"
                                        "0.2,50,1.0\n"
                                        "0.6,150,2.718281828459045\n");
  const DataSet ds = load_dataset(csv_path, load_preprocess_doc(schema_path));
  REQUIRE(ds.size() == 2);
  CHECK(ds.inputs(0, 0) == 0.2);
  CHECK(ds.inputs(0, 1) == 0.0);  // binned
  CHECK(ds.inputs(1, 1) == 1.0);
  CHECK(ds.outputs[0] == 0.0);  // logged
  CHECK(std::abs(ds.outputs[1] - 1.0) <= 1e-12);
}

}  // TEST_SUITE
