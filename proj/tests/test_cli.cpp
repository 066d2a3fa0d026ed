// End-to-end checks of the tkrr binary: flag handling, exit codes,
// deterministic outputs and the CSV contracts.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <doctest.h>

#include "test_helpers.hpp"
#include "tkrr/model.hpp"

using test_util::parse_csv;
using test_util::read_text;
using test_util::run_cli;

namespace {

const std::string kToyCsv = std::string(TKRR_DATA_DIR) + "/toy2d.csv";

std::string tmp_path(const std::string& name) {
  return (test_util::temp_dir() / name).string();
}

}  // namespace

TEST_CASE("train writes a deterministic model") {
  const std::string model_a = tmp_path("cli_model_a.json");
  const std::string model_b = tmp_path("cli_model_b.json");
  const std::string base = "train --data \"" + kToyCsv + "\" --target y --m-hat 6 --rank 3 "
                           "--sweeps 4 --seed 9 --output ";
  const auto first = run_cli(base + model_a);
  CHECK(first.exit_code == 0);
  CHECK(std::filesystem::exists(model_a));
  CHECK(first.out.find("final loss") != std::string::npos);

  const auto second = run_cli(base + model_b);
  CHECK(second.exit_code == 0);
  CHECK(read_text(model_a) == read_text(model_b));
  // stdout identical up to the differing output path
  const auto head = [](const std::string& text) {
    return text.substr(0, text.find("model written to"));
  };
  CHECK(head(first.out) == head(second.out));
}

TEST_CASE("train reports missing data files on exit code 3") {
  const auto result = run_cli("train --data /no/such/file.csv --target y --output " +
                              tmp_path("unused.json"));
  CHECK(result.exit_code == 3);
  CHECK(result.err.find("/no/such/file.csv") != std::string::npos);
  CHECK(!std::filesystem::exists(tmp_path("unused.json")));
}

TEST_CASE("bad flags exit with code 2") {
  CHECK(run_cli("train --data x.csv").exit_code == 2);          // missing --target
  CHECK(run_cli("train --frobnicate").exit_code == 2);          // unknown flag
  CHECK(run_cli("eval --model m --data d --target y --m-hat 0").exit_code == 2);
  CHECK(run_cli("").exit_code == 2);                            // missing subcommand
}

TEST_CASE("trace CSV starts at 1.0 and never increases in full mode") {
  const std::string trace = tmp_path("cli_trace.csv");
  const auto result = run_cli("train --data \"" + kToyCsv +
                              "\" --target y --m-hat 6 --rank 3 --reg-mode full --seed 2 "
                              "--output " + tmp_path("cli_trace_model.json") + " --trace " + trace);
  REQUIRE(result.exit_code == 0);
  const auto rows = parse_csv(read_text(trace));
  REQUIRE(rows.size() >= 2);
  CHECK(rows[0] == std::vector<std::string>{"update_index", "raw_loss", "normalized_loss"});
  CHECK(std::stod(rows[1][2]) == 1.0);
  double prev = 1.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(std::stoi(rows[i][0]) == static_cast<int>(i));
    const double normalized = std::stod(rows[i][2]);
    CHECK(normalized <= prev * (1.0 + 1e-9));
    prev = normalized;
    // raw and normalized columns agree
    CHECK(std::stod(rows[i][1]) / std::stod(rows[1][1]) ==
          doctest::Approx(normalized).epsilon(1e-12));
  }
}

TEST_CASE("eval matches an in-process computation") {
  const std::string model_path = tmp_path("cli_eval_model.json");
  REQUIRE(run_cli("train --data \"" + kToyCsv + "\" --target y --m-hat 6 --rank 3 --seed 4 "
                  "--output " + model_path).exit_code == 0);

  // three held-out rows with hand-picked values
  const std::string eval_csv = test_util::write_text(
      "cli_eval_data.csv", "x1,x2,y\n0.1,1.0,0.5\n-0.4,2.0,-0.25\n1.2,3.5,0.75\n");
  const std::string out_csv = tmp_path("cli_eval_out.csv");
  const auto result =
      run_cli("eval --model " + model_path + " --data " + eval_csv + " --target y --out " + out_csv);
  REQUIRE(result.exit_code == 0);

  const tkrr::TkrrModel model = tkrr::load(model_path);
  Eigen::MatrixXd x(3, 2);
  x << 0.1, 1.0, -0.4, 2.0, 1.2, 3.5;
  Eigen::VectorXd y(3);
  y << 0.5, -0.25, 0.75;
  const double expected = tkrr::mean_squared_error(tkrr::predict(model, x), y);

  const auto rows = parse_csv(read_text(out_csv));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<std::string>{"metric", "value"});
  CHECK(rows[1][0] == "mse");
  // 17-digit output parses back to the identical double
  CHECK(std::stod(rows[1][1]) == expected);
}

TEST_CASE("eval reports a zero rate on perfectly labeled data") {
  // train a small classifier, then label a probe set with its own predictions
  const tkrr::Dataset banana = test_util::make_banana(200, 8);
  const std::string train_csv =
      test_util::write_text("cli_banana.csv", test_util::dataset_to_csv(banana));
  const std::string model_path = tmp_path("cli_class_model.json");
  REQUIRE(run_cli("train --data " + train_csv + " --target y --m-hat 6 --rank 4 --seed 1 "
                  "--lengthscale 0.5 --output " + model_path).exit_code == 0);

  const tkrr::TkrrModel model = tkrr::load(model_path);
  tkrr::Dataset probe = test_util::make_banana(40, 9);
  probe.y = tkrr::classify(model, probe.X).cast<double>();
  const std::string probe_csv =
      test_util::write_text("cli_probe.csv", test_util::dataset_to_csv(probe));
  const std::string out_csv = tmp_path("cli_class_out.csv");
  const auto result = run_cli("eval --model " + model_path + " --data " + probe_csv +
                              " --target y --out " + out_csv);
  REQUIRE(result.exit_code == 0);
  const auto rows = parse_csv(read_text(out_csv));
  CHECK(rows[1][0] == "misclassification_rate");
  CHECK(std::stod(rows[1][1]) == 0.0);
}

TEST_CASE("eval rejects dimension mismatches with exit code 2") {
  const std::string model_path = tmp_path("cli_dim_model.json");
  REQUIRE(run_cli("train --data \"" + kToyCsv + "\" --target y --m-hat 4 --rank 2 --output " +
                  model_path).exit_code == 0);
  const std::string wide_csv =
      test_util::write_text("cli_wide.csv", "a,b,c,y\n1,2,3,4\n5,6,7,8\n");
  const auto result =
      run_cli("eval --model " + model_path + " --data " + wide_csv + " --target y --out " +
              tmp_path("cli_dim_out.csv"));
  CHECK(result.exit_code == 2);
}

TEST_CASE("kernel-bench output contract") {
  SUBCASE("single m_hat gives a single data row") {
    const std::string out = tmp_path("cli_bench_one.csv");
    REQUIRE(run_cli("kernel-bench --m-hat 8 --out " + out).exit_code == 0);
    const auto rows = parse_csv(read_text(out));
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == std::vector<std::string>{"m_hat", "sup_error", "mean_error"});
    CHECK(rows[1][0] == "8");
  }

  SUBCASE("default sweep decreases and parses back") {
    const std::string out = tmp_path("cli_bench_default.csv");
    REQUIRE(run_cli("kernel-bench --out " + out).exit_code == 0);
    const auto rows = parse_csv(read_text(out));
    REQUIRE(rows.size() == 5);
    double prev = 1e300;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const double sup = std::stod(rows[i][1]);
      CHECK(std::isfinite(sup));
      CHECK(sup <= prev);
      prev = sup;
    }
  }

  SUBCASE("tiny grid stays finite") {
    const std::string out = tmp_path("cli_bench_tiny.csv");
    REQUIRE(run_cli("kernel-bench --grid 2 --m-hat 4 --out " + out).exit_code == 0);
    const auto rows = parse_csv(read_text(out));
    CHECK(std::isfinite(std::stod(rows[1][1])));
    CHECK(std::isfinite(std::stod(rows[1][2])));
  }
}

TEST_CASE("compare emits per-run rows for each method") {
  const std::string out = tmp_path("cli_compare.csv");
  const std::string base = "compare --data \"" + kToyCsv +
                           "\" --target y --m-hat 5 --rank 3 --seeds 2 --seed 3 --out " + out;
  const auto result = run_cli(base);
  REQUIRE(result.exit_code == 0);
  CHECK(result.out.find("T-KRR") != std::string::npos);
  CHECK(result.out.find("RFF") != std::string::npos);

  const auto rows = parse_csv(read_text(out));
  REQUIRE(rows.size() == 7);  // header + 3 methods x 2 seeds
  CHECK(rows[0] == std::vector<std::string>{"method", "seed", "metric"});
  int tkrr_rows = 0, rff_rows = 0, krr_rows = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(std::isfinite(std::stod(rows[i][2])));
    if (rows[i][0] == "T-KRR") ++tkrr_rows;
    if (rows[i][0] == "RFF") ++rff_rows;
    if (rows[i][0] == "KRR") ++krr_rows;
  }
  CHECK(tkrr_rows == 2);
  CHECK(rff_rows == 2);
  CHECK(krr_rows == 2);

  // deterministic given identical flags
  const std::string out2 = tmp_path("cli_compare2.csv");
  const auto rerun = run_cli("compare --data \"" + kToyCsv +
                             "\" --target y --m-hat 5 --rank 3 --seeds 2 --seed 3 --out " + out2);
  REQUIRE(rerun.exit_code == 0);
  CHECK(read_text(out) == read_text(out2));
  CHECK(result.out == rerun.out);
}

TEST_CASE("compare marks the dual baseline N/A above the cap") {
  const std::string out = tmp_path("cli_compare_cap.csv");
  const auto result = run_cli("compare --data \"" + kToyCsv +
                              "\" --target y --m-hat 4 --rank 2 --seeds 2 --krr-cap 10 --out " +
                              out);
  REQUIRE(result.exit_code == 0);
  CHECK(result.out.find("N/A") != std::string::npos);
  for (const auto& row : parse_csv(read_text(out))) {
    CHECK(row[0] != "KRR");
  }
}
