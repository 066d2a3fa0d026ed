// tkrr command-line front end: train, eval, kernel-bench and compare.
//
// Exit codes: 0 success, 2 bad flags or incompatible parameters, 3 data
// errors (missing/ill-formed files), 4 numerical failures.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tkrr/baselines.hpp"
#include "tkrr/data.hpp"
#include "tkrr/errors.hpp"
#include "tkrr/features.hpp"
#include "tkrr/model.hpp"
#include "tkrr/solver.hpp"

namespace {

constexpr std::uint64_t kRffSeedOffset = 0x9e3779b97f4a7c15ULL;

struct CommonTrainFlags {
  std::string data_path;
  std::string target;
  bool no_header = false;
  std::string task = "auto";
  int m_hat = 10;
  int rank = 8;
  double lambda = 1e-5;
  bool lambda_rule = false;  // lambda = 100 / N_train
  double lengthscale = 0.0;  // 0 means the scaled-input heuristic
  int sweeps = 10;
  std::string reg_mode = "diagonal";
  double margin = 1.25;
  std::uint64_t seed = 0;
  std::string memory_mode = "cached";
  bool equilibrate = false;
};

void add_common_train_flags(CLI::App* cmd, CommonTrainFlags& flags) {
  cmd->add_option("--data", flags.data_path, "CSV file with features and target")->required();
  cmd->add_option("--target", flags.target, "target column: header name or zero-based index")
      ->required();
  cmd->add_flag("--no-header", flags.no_header, "CSV has no header row");
  cmd->add_option("--task", flags.task, "task kind (default: auto)")
      ->check(CLI::IsMember({"auto", "regression", "classification"}));
  cmd->add_option("--m-hat", flags.m_hat, "basis functions per dimension")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--rank", flags.rank, "CPD rank")->check(CLI::PositiveNumber);
  auto* lambda_opt = cmd->add_option("--lambda", flags.lambda,
                                     "regularization weight (default 1e-5)")
                         ->check(CLI::NonNegativeNumber);
  cmd->add_flag("--lambda-rule", flags.lambda_rule, "use lambda = 100/N instead of --lambda")
      ->excludes(lambda_opt);
  cmd->add_option("--lengthscale", flags.lengthscale,
                  "kernel lengthscale in scaled-input units (default: auto heuristic)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--sweeps", flags.sweeps, "training sweeps (default 10)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--reg-mode", flags.reg_mode, "regularizer assembly (default diagonal)")
      ->check(CLI::IsMember({"diagonal", "full"}));
  cmd->add_option("--margin", flags.margin, "feature-box margin factor (default 1.25)")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--seed", flags.seed, "random seed");
  cmd->add_option("--memory-mode", flags.memory_mode, "solver cache mode (default cached)")
      ->check(CLI::IsMember({"cached", "streaming"}));
  cmd->add_flag("--equilibrate", flags.equilibrate,
                "rebalance CPD component norms across factors after each sweep");
}

tkrr::TrainConfig make_train_config(const CommonTrainFlags& flags, Eigen::Index n_train) {
  tkrr::TrainConfig cfg;
  cfg.m_hat = flags.m_hat;
  cfg.rank = flags.rank;
  cfg.lambda = flags.lambda_rule ? 100.0 / static_cast<double>(n_train) : flags.lambda;
  cfg.sweeps = flags.sweeps;
  cfg.reg_mode =
      flags.reg_mode == "full" ? tkrr::RegMode::full_hadamard : tkrr::RegMode::diagonal_only;
  cfg.seed = flags.seed;
  cfg.memory_mode = flags.memory_mode == "streaming" ? tkrr::MemoryMode::streaming
                                                     : tkrr::MemoryMode::cached;
  cfg.equilibrate = flags.equilibrate;
  return cfg;
}

tkrr::FitOverrides make_overrides(const CommonTrainFlags& flags) {
  tkrr::FitOverrides overrides;
  if (flags.lengthscale > 0.0) overrides.lengthscale = flags.lengthscale;
  overrides.margin = flags.margin;
  if (flags.task == "regression") overrides.task = tkrr::Task::regression;
  if (flags.task == "classification") overrides.task = tkrr::Task::classification;
  return overrides;
}

std::string fmt(double value) {
  std::ostringstream out;
  out << std::setprecision(17) << value;
  return out.str();
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw tkrr::DataError("cannot open '" + path + "' for writing");
  out << contents;
  if (!out) throw tkrr::DataError("write to '" + path + "' failed");
}

double evaluate_model(const tkrr::TkrrModel& model, const tkrr::Dataset& data,
                      std::string* metric_name = nullptr) {
  if (model.task == tkrr::Task::classification) {
    if (metric_name != nullptr) *metric_name = "misclassification_rate";
    return tkrr::misclassification_rate(tkrr::classify(model, data.X), data.y);
  }
  if (metric_name != nullptr) *metric_name = "mse";
  return tkrr::mean_squared_error(tkrr::predict(model, data.X), data.y);
}

int run_train(const CommonTrainFlags& flags, const std::string& output_path,
              const std::string& trace_path) {
  tkrr::Dataset dataset = tkrr::load_csv(flags.data_path, flags.target, !flags.no_header);
  tkrr::TrainConfig cfg = make_train_config(flags, dataset.n());
  cfg.capture_trace = true;
  auto [model, trace] = tkrr::fit(dataset, cfg, make_overrides(flags));

  tkrr::save(model, output_path);
  if (!trace_path.empty()) {
    std::ostringstream csv;
    csv << "update_index,raw_loss,normalized_loss\n";
    for (std::size_t i = 0; i < trace.size(); ++i) {
      csv << (i + 1) << ',' << fmt(trace[i]) << ',' << fmt(trace[i] / trace.front()) << '\n';
    }
    write_file(trace_path, csv.str());
  }

  std::string metric_name;
  const double metric = evaluate_model(model, dataset, &metric_name);
  std::cout << "trained on " << dataset.n() << " rows, " << dataset.dims() << " dims"
            << " (task: " << (model.task == tkrr::Task::classification ? "classification" : "regression")
            << ", lengthscale: " << model.feature_config.lengthscale << ", lambda: " << cfg.lambda
            << ")\n";
  if (!trace.empty()) {
    std::cout << "final loss: " << fmt(trace.back()) << " (normalized "
              << fmt(trace.back() / trace.front()) << ")\n";
  }
  std::cout << "train " << metric_name << ": " << fmt(metric) << '\n'
            << "model written to " << output_path << '\n';
  return 0;
}

int run_eval(const std::string& model_path, const std::string& data_path,
             const std::string& target, bool no_header, const std::string& out_path) {
  const tkrr::TkrrModel model = tkrr::load(model_path);
  const tkrr::Dataset data = tkrr::load_csv(data_path, target, !no_header);
  std::string metric_name;
  const double metric = evaluate_model(model, data, &metric_name);
  std::cout << metric_name << ": " << fmt(metric) << '\n';
  write_file(out_path, "metric,value\n" + metric_name + "," + fmt(metric) + "\n");
  return 0;
}

int run_kernel_bench(double lengthscale, double half_width, const std::vector<int>& m_hats,
                     int grid, double data_range, const std::string& out_path) {
  const auto rows = tkrr::kernel_approx_bench(lengthscale, half_width, m_hats, grid, data_range);
  std::cout << "kernel approximation error on a " << grid << "x" << grid << " pair grid over [" << -data_range
            << ", " << data_range << "] (l = " << lengthscale << ", U = " << half_width << ")\n";
  std::cout << std::left << std::setw(8) << "m_hat" << std::setw(16) << "sup_error"
            << "mean_error\n";
  std::ostringstream csv;
  csv << "m_hat,sup_error,mean_error\n";
  for (const auto& row : rows) {
    std::cout << std::left << std::setw(8) << row.m_hat << std::setw(16)
              << std::setprecision(6) << std::scientific << row.sup_error << row.mean_error
              << std::defaultfloat << '\n';
    csv << row.m_hat << ',' << fmt(row.sup_error) << ',' << fmt(row.mean_error) << '\n';
  }
  write_file(out_path, csv.str());
  return 0;
}

struct MethodRuns {
  std::string name;
  std::vector<double> metrics;  // one per completed split
  bool skipped = false;
  std::string skip_reason;
};

int run_compare(const CommonTrainFlags& flags, int seed_count, double train_fraction,
                Eigen::Index krr_cap, const std::string& out_path) {
  const tkrr::Dataset dataset = tkrr::load_csv(flags.data_path, flags.target, !flags.no_header);

  MethodRuns tkrr_runs{"T-KRR", {}, false, ""};
  MethodRuns rff_runs{"RFF", {}, false, ""};
  MethodRuns krr_runs{"KRR", {}, false, ""};
  std::string metric_name = "mse";

  for (int k = 0; k < seed_count; ++k) {
    const std::uint64_t seed = flags.seed + static_cast<std::uint64_t>(k);
    auto [train_part, test_part] = tkrr::split(dataset, train_fraction, seed);

    CommonTrainFlags run_flags = flags;
    run_flags.seed = seed;
    tkrr::TrainConfig cfg = make_train_config(run_flags, train_part.n());
    cfg.capture_trace = false;
    auto [model, trace] = tkrr::fit(train_part, cfg, make_overrides(run_flags));
    tkrr_runs.metrics.push_back(evaluate_model(model, test_part, &metric_name));

    // RFF baseline at parameter parity: M_RFF = m_hat * rank random features
    // through the same scaling/standardization pipeline and lengthscale.
    const tkrr::Scaler& scaler = model.scaler;
    const Eigen::MatrixXd scaled_train = tkrr::apply_scaler(scaler, train_part.X);
    const Eigen::MatrixXd scaled_test = tkrr::apply_scaler(scaler, test_part.X);
    Eigen::VectorXd train_targets = train_part.y;
    if (model.task == tkrr::Task::regression) {
      train_targets = (train_part.y.array() - scaler.target_mean).matrix();
      if (scaler.target_std > 0.0) train_targets /= scaler.target_std;
    }
    const int m_rff = flags.m_hat * flags.rank;
    const auto rff_cfg =
        tkrr::RFFConfig::create(m_rff, static_cast<int>(dataset.dims()),
                                model.feature_config.lengthscale, seed ^ kRffSeedOffset);
    const Eigen::VectorXd w =
        tkrr::primal_ridge_fit(tkrr::rff_matrix(scaled_train, rff_cfg), train_targets, cfg.lambda);
    const Eigen::VectorXd rff_scores = tkrr::rff_matrix(scaled_test, rff_cfg) * w;
    if (model.task == tkrr::Task::classification) {
      Eigen::VectorXi labels(rff_scores.size());
      for (Eigen::Index i = 0; i < rff_scores.size(); ++i)
        labels(i) = rff_scores(i) >= 0.0 ? 1 : -1;
      rff_runs.metrics.push_back(tkrr::misclassification_rate(labels, test_part.y));
    } else {
      rff_runs.metrics.push_back(tkrr::mean_squared_error(
          tkrr::destandardize(rff_scores, scaler.target_mean, scaler.target_std), test_part.y));
    }

    // Dual KRR baseline, skipped above the Gram-solve cap.
    if (train_part.n() > krr_cap) {
      krr_runs.skipped = true;
      krr_runs.skip_reason = "N > " + std::to_string(krr_cap);
    } else {
      const tkrr::KernelParams params{model.feature_config.lengthscale};
      const Eigen::VectorXd alpha =
          tkrr::krr_dual_fit(scaled_train, train_targets, params, cfg.lambda, krr_cap);
      const Eigen::VectorXd krr_scores =
          tkrr::krr_dual_predict(scaled_train, alpha, params, scaled_test);
      if (model.task == tkrr::Task::classification) {
        Eigen::VectorXi labels(krr_scores.size());
        for (Eigen::Index i = 0; i < krr_scores.size(); ++i)
          labels(i) = krr_scores(i) >= 0.0 ? 1 : -1;
        krr_runs.metrics.push_back(tkrr::misclassification_rate(labels, test_part.y));
      } else {
        krr_runs.metrics.push_back(tkrr::mean_squared_error(
            tkrr::destandardize(krr_scores, scaler.target_mean, scaler.target_std), test_part.y));
      }
    }
  }

  auto mean_std = [](const std::vector<double>& values) {
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var = values.size() > 1 ? var / (n - 1.0) : 0.0;  // sample std over splits
    return std::make_pair(mean, std::sqrt(var));
  };

  std::cout << "comparison over " << seed_count << " splits (" << train_fraction * 100.0
            << "% train, metric: test " << metric_name << ")\n";
  std::cout << std::left << std::setw(8) << "method" << "mean +- std\n";
  std::ostringstream csv;
  csv << "method,seed,metric\n";
  for (const MethodRuns* runs : {&tkrr_runs, &rff_runs, &krr_runs}) {
    if (runs->skipped || runs->metrics.empty()) {
      std::cout << std::left << std::setw(8) << runs->name << "N/A"
                << (runs->skip_reason.empty() ? "" : " (" + runs->skip_reason + ")") << '\n';
      continue;
    }
    const auto [mean, stddev] = mean_std(runs->metrics);
    std::cout << std::left << std::setw(8) << runs->name << std::setprecision(6)
              << std::scientific << mean << " +- " << stddev << std::defaultfloat << '\n';
    for (std::size_t k = 0; k < runs->metrics.size(); ++k) {
      csv << runs->name << ',' << (flags.seed + k) << ',' << fmt(runs->metrics[k]) << '\n';
    }
  }
  if (!out_path.empty()) write_file(out_path, csv.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tensor-kernel ridge regression with deterministic Fourier features"};
  app.require_subcommand(1);

  CommonTrainFlags train_flags;
  std::string model_out = "model.json";
  std::string trace_out;
  CLI::App* train_cmd = app.add_subcommand("train", "fit a model and write it as JSON");
  add_common_train_flags(train_cmd, train_flags);
  train_cmd->add_option("--output", model_out, "model output path (default model.json)");
  train_cmd->add_option("--trace", trace_out, "optional loss-trace CSV path");

  std::string eval_model, eval_data, eval_target, eval_out = "eval_metrics.csv";
  bool eval_no_header = false;
  CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a saved model on a dataset");
  eval_cmd->add_option("--model", eval_model, "model JSON path")->required();
  eval_cmd->add_option("--data", eval_data, "CSV file")->required();
  eval_cmd->add_option("--target", eval_target, "target column")->required();
  eval_cmd->add_flag("--no-header", eval_no_header, "CSV has no header row");
  eval_cmd->add_option("--out", eval_out, "one-row metrics CSV (default eval_metrics.csv)");

  double bench_lengthscale = 0.3, bench_half_width = 1.0, bench_range = 0.5;
  int bench_grid = 100;
  std::vector<int> bench_m_hats{4, 8, 16, 32};
  std::string bench_out = "kernel_bench.csv";
  CLI::App* bench_cmd =
      app.add_subcommand("kernel-bench", "kernel-approximation error vs basis count");
  bench_cmd->add_option("--lengthscale", bench_lengthscale, "kernel lengthscale (default 0.3)")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--half-width", bench_half_width, "feature-domain half width U (default 1)")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--m-hat", bench_m_hats, "basis counts to sweep (default 4,8,16,32)")
      ->delimiter(',');
  bench_cmd->add_option("--grid", bench_grid, "grid points per axis (default 100)")
      ->check(CLI::Range(2, 100000));
  bench_cmd->add_option("--data-range", bench_range,
                        "half width of the evaluation interval (default 0.5)")
      ->check(CLI::PositiveNumber);
  bench_cmd->add_option("--out", bench_out, "CSV output path (default kernel_bench.csv)");

  CommonTrainFlags compare_flags;
  int compare_seeds = 10;
  double compare_fraction = 0.9;
  Eigen::Index compare_krr_cap = 10000;
  std::string compare_out;
  CLI::App* compare_cmd =
      app.add_subcommand("compare", "T-KRR vs RFF (and dual KRR) over random splits");
  add_common_train_flags(compare_cmd, compare_flags);
  compare_cmd->add_option("--seeds", compare_seeds, "number of random splits (default 10)")
      ->check(CLI::PositiveNumber);
  compare_cmd->add_option("--train-fraction", compare_fraction,
                          "training fraction per split (default 0.9)");
  compare_cmd->add_option("--krr-cap", compare_krr_cap,
                          "largest N for the dual KRR baseline (default 10000)");
  compare_cmd->add_option("--out", compare_out, "per-run metrics CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (train_cmd->parsed()) return run_train(train_flags, model_out, trace_out);
    if (eval_cmd->parsed())
      return run_eval(eval_model, eval_data, eval_target, eval_no_header, eval_out);
    if (bench_cmd->parsed())
      return run_kernel_bench(bench_lengthscale, bench_half_width, bench_m_hats, bench_grid,
                              bench_range, bench_out);
    if (compare_cmd->parsed())
      return run_compare(compare_flags, compare_seeds, compare_fraction, compare_krr_cap,
                         compare_out);
  } catch (const tkrr::NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const tkrr::DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const tkrr::SchemaError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const tkrr::InvalidParameterError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const tkrr::CapacityError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const tkrr::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
