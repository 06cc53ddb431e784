// Command-line front end: train / predict / evaluate / crossval /
// simulate-clt / boundary over CSV files and plain-text model files.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "osr/calibration.hpp"
#include "osr/classifier.hpp"
#include "osr/io.hpp"

namespace {

using namespace osr;

ScoreMode parse_mode(const std::string& s) {
  if (s == "gaussian") return ScoreMode::Gaussian;
  if (s == "nonparam") return ScoreMode::Nonparametric;
  throw CLI::ValidationError("--mode", "must be gaussian or nonparam");
}

Estimator parse_estimator(const std::string& s) {
  if (s == "sample") return Estimator::Sample;
  if (s == "ledoit-wolf") return Estimator::LedoitWolf;
  throw CLI::ValidationError("--estimator", "must be sample or ledoit-wolf");
}

// "clt" | "cv" | "fixed:R0,R1"
RadiusPolicy parse_radius_policy(const std::string& s, double alpha) {
  if (s == "clt") return CltPolicy{alpha};
  if (s == "cv") return CrossValidationPolicy{default_radius_grid(), 5, 1};
  if (s.rfind("fixed:", 0) == 0) {
    const std::string rest = s.substr(6);
    const auto comma = rest.find(',');
    if (comma == std::string::npos)
      throw CLI::ValidationError("--radius", "fixed form is fixed:R0,R1");
    try {
      const double r0 = std::stod(rest.substr(0, comma));
      const double r1 = std::stod(rest.substr(comma + 1));
      return FixedPolicy{r0, r1};
    } catch (const std::exception&) {
      throw CLI::ValidationError("--radius", "fixed radii must be numeric");
    }
  }
  throw CLI::ValidationError("--radius", "must be clt, cv or fixed:R0,R1");
}

std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> grid;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      grid.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw CLI::ValidationError("--grid", "entries must be numeric");
    }
  }
  if (grid.empty()) throw CLI::ValidationError("--grid", "empty grid");
  return grid;
}

int run(int argc, char** argv) {
  CLI::App app{"Optimistic score ratio classification"};
  app.require_subcommand(1);

  // --- train ---
  auto* cmd_train = app.add_subcommand("train", "Train a classifier");
  std::string train_data, train_mode = "gaussian", train_radius = "clt";
  std::string train_estimator = "ledoit-wolf", train_out;
  double train_alpha = 0.5;
  bool train_jitter = false, train_no_tune = false;
  std::uint64_t train_seed = 0;
  cmd_train->add_option("--data", train_data, "training CSV with a label column")
      ->required();
  cmd_train->add_option("--mode", train_mode, "gaussian|nonparam");
  cmd_train->add_option("--radius", train_radius, "clt|cv|fixed:R0,R1");
  cmd_train->add_option("--alpha", train_alpha, "chi-square quantile level");
  cmd_train->add_option("--estimator", train_estimator, "sample|ledoit-wolf");
  cmd_train->add_flag("--jitter", train_jitter,
                      "repair a degenerate covariance with a diagonal bump");
  cmd_train->add_flag("--no-tune", train_no_tune,
                      "skip threshold tuning (tau = 1)");
  cmd_train->add_option("--seed", train_seed, "RNG seed");
  cmd_train->add_option("--out", train_out, "model file to write")->required();

  // --- predict ---
  auto* cmd_predict = app.add_subcommand("predict", "Label new points");
  std::string predict_model, predict_data, predict_out;
  cmd_predict->add_option("--model", predict_model, "model file")->required();
  cmd_predict->add_option("--data", predict_data, "feature CSV")->required();
  cmd_predict->add_option("--out", predict_out, "prediction CSV")->required();

  // --- evaluate ---
  auto* cmd_eval = app.add_subcommand("evaluate", "Report the CCR");
  std::string eval_model, eval_data;
  cmd_eval->add_option("--model", eval_model, "model file")->required();
  cmd_eval->add_option("--data", eval_data, "labeled CSV")->required();

  // --- crossval ---
  auto* cmd_cv = app.add_subcommand(
      "crossval", "Trial-averaged cross-validated radius search");
  std::string cv_data, cv_mode = "gaussian", cv_grid_str,
              cv_estimator = "ledoit-wolf";
  int cv_folds = 5, cv_trials = 10;
  std::uint64_t cv_seed = 0;
  cmd_cv->add_option("--data", cv_data, "labeled CSV")->required();
  cmd_cv->add_option("--mode", cv_mode, "gaussian|nonparam");
  cmd_cv->add_option("--grid", cv_grid_str, "comma-separated radii");
  cmd_cv->add_option("--folds", cv_folds, "fold count");
  cmd_cv->add_option("--trials", cv_trials, "75/25 trial count");
  cmd_cv->add_option("--estimator", cv_estimator, "sample|ledoit-wolf");
  cmd_cv->add_option("--seed", cv_seed, "RNG seed");

  // --- simulate-clt ---
  auto* cmd_sim = app.add_subcommand(
      "simulate-clt", "Finite-sample divergence vs the limiting law");
  std::string sim_generator = "gaussian", sim_out;
  int sim_d = 2, sim_n = 1000, sim_reps = 5000, sim_limit_reps = 100000;
  int sim_tensor_samples = 200000;
  std::uint64_t sim_seed = 0;
  cmd_sim->add_option("--generator", sim_generator, "gaussian|chi2");
  cmd_sim->add_option("--d", sim_d, "dimension")->check(CLI::PositiveNumber);
  cmd_sim->add_option("--n", sim_n, "samples per rep")
      ->check(CLI::PositiveNumber);
  cmd_sim->add_option("--reps", sim_reps, "simulation reps")
      ->check(CLI::PositiveNumber);
  cmd_sim->add_option("--limit-reps", sim_limit_reps, "limiting-law draws")
      ->check(CLI::PositiveNumber);
  cmd_sim->add_option("--tensor-samples", sim_tensor_samples,
                      "draws used to estimate non-Gaussian moment tensors")
      ->check(CLI::PositiveNumber);
  cmd_sim->add_option("--seed", sim_seed, "RNG seed");
  cmd_sim->add_option("--out", sim_out, "two-column CSV to write")->required();

  // --- boundary ---
  auto* cmd_boundary =
      app.add_subcommand("boundary", "Export a 2-d decision grid");
  std::string boundary_model, boundary_out;
  double bx_min = -3, bx_max = 3, by_min = -3, by_max = 3;
  int boundary_grid = 100;
  cmd_boundary->add_option("--model", boundary_model, "model file")->required();
  cmd_boundary->add_option("--xmin", bx_min, "x lower bound");
  cmd_boundary->add_option("--xmax", bx_max, "x upper bound");
  cmd_boundary->add_option("--ymin", by_min, "y lower bound");
  cmd_boundary->add_option("--ymax", by_max, "y upper bound");
  cmd_boundary->add_option("--grid", boundary_grid, "grid points per axis")
      ->check(CLI::PositiveNumber);
  cmd_boundary->add_option("--out", boundary_out, "grid CSV to write")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;  // usage errors are exit code 1, --help is 0
  }

  if (*cmd_train) {
    const Dataset data = load_csv(train_data, /*require_label=*/true);
    TrainOptions opts;
    opts.estimator = parse_estimator(train_estimator);
    opts.tune_threshold = !train_no_tune;
    opts.seed = train_seed;
    opts.jitter = train_jitter ? 1e-8 : 0.0;
    const RadiusPolicy policy = parse_radius_policy(train_radius, train_alpha);
    const ClassifierModel model =
        train(data, parse_mode(train_mode), policy, opts);
    save_model(model, train_out);
    std::cout << "rho0 " << format_double(model.spec0.radius()) << '\n';
    std::cout << "rho1 " << format_double(model.spec1.radius()) << '\n';
    std::cout << "log_threshold " << format_double(model.log_threshold) << '\n';
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * ccr(model, data));
    std::cout << "training_ccr " << buf << '\n';
    return 0;
  }
  if (*cmd_predict) {
    const ClassifierModel model = load_model(predict_model);
    const Dataset data = load_csv(predict_data, /*require_label=*/false);
    std::ofstream out(predict_out);
    if (!out) throw ParseError("cannot write " + predict_out);
    out << "row,log_ratio,label\n";
    for (Eigen::Index i = 0; i < data.rows(); ++i) {
      const double lr = log_ratio(model, data.features().row(i));
      out << i << ',' << format_double(lr) << ','
          << (lr >= model.log_threshold ? 1 : 0) << '\n';
    }
    return 0;
  }
  if (*cmd_eval) {
    const ClassifierModel model = load_model(eval_model);
    const Dataset data = load_csv(eval_data, /*require_label=*/true);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * ccr(model, data));
    std::cout << "CCR " << buf << '\n';
    return 0;
  }
  if (*cmd_cv) {
    const Dataset data = load_csv(cv_data, /*require_label=*/true);
    const ScoreMode mode = parse_mode(cv_mode);
    const Estimator estimator = parse_estimator(cv_estimator);
    const std::vector<double> grid =
        cv_grid_str.empty() ? default_radius_grid() : parse_grid(cv_grid_str);
    // per trial: stratified 75/25 split, CV on the training part, CCR on the
    // held-out part
    double mean_ccr = 0.0;
    for (int trial = 0; trial < cv_trials; ++trial) {
      auto rng = detail::make_rng(cv_seed, 1000003ull + trial);
      std::vector<Eigen::Index> train_rows, test_rows;
      for (int c = 0; c < 2; ++c) {
        auto idx = data.class_indices(c);
        std::shuffle(idx.begin(), idx.end(), rng);
        const std::size_t cut = (idx.size() * 3) / 4;
        train_rows.insert(train_rows.end(), idx.begin(), idx.begin() + cut);
        test_rows.insert(test_rows.end(), idx.begin() + cut, idx.end());
      }
      auto subset = [&data](const std::vector<Eigen::Index>& rows) {
        std::vector<int> labels;
        labels.reserve(rows.size());
        for (Eigen::Index r : rows)
          labels.push_back(data.labels()[static_cast<std::size_t>(r)]);
        return Dataset(detail::take_rows(data.features(), rows),
                       std::move(labels));
      };
      const Dataset train_set = subset(train_rows);
      const Dataset test_set = subset(test_rows);
      const CrossValidationResult cvr = cross_validate(
          train_set, mode, grid, cv_folds, 1, estimator, cv_seed + trial);
      TrainOptions opts;
      opts.estimator = estimator;
      opts.seed = cv_seed + trial;
      const ClassifierModel model =
          train(train_set, mode,
                FixedPolicy{cvr.best_radius, cvr.best_radius}, opts);
      mean_ccr += ccr(model, test_set);
      std::cout << "trial " << trial << " rho "
                << format_double(cvr.best_radius) << '\n';
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * mean_ccr / cv_trials);
    std::cout << "mean_ccr " << buf << '\n';
    return 0;
  }
  if (*cmd_sim) {
    SampleGenerator gen;
    if (sim_generator == "gaussian")
      gen = SampleGenerator::Gaussian;
    else if (sim_generator == "chi2")
      gen = SampleGenerator::NormalizedChi2;
    else
      throw CLI::ValidationError("--generator", "must be gaussian or chi2");
    const DivergenceSimulation sim =
        simulate_divergence_distribution(gen, sim_d, sim_n, sim_reps, sim_seed);
    MomentTensors tensors = MomentTensors::gaussian(sim_d);
    if (gen == SampleGenerator::NormalizedChi2) {
      auto rng = detail::make_rng(sim_seed, 777ull);
      std::normal_distribution<double> normal;
      MatrixXd draws(sim_tensor_samples, sim_d);
      for (int i = 0; i < sim_tensor_samples; ++i)
        for (int j = 0; j < sim_d; ++j) {
          const double g = normal(rng);
          draws(i, j) = (g * g - 1.0) / std::sqrt(2.0);
        }
      tensors = estimate_moment_tensors(draws);
    }
    const std::vector<double> law =
        sample_limiting_law(tensors, sim_limit_reps, sim_seed + 1);
    std::ofstream out(sim_out);
    if (!out) throw ParseError("cannot write " + sim_out);
    out << "empirical,limiting\n";
    const std::size_t rows = std::max(sim.values.size(), law.size());
    for (std::size_t i = 0; i < rows; ++i) {
      if (i < sim.values.size()) out << format_double(sim.values[i]);
      out << ',';
      if (i < law.size()) out << format_double(law[i]);
      out << '\n';
    }
    std::cout << "rng mt19937_64 seed " << sim_seed << '\n';
    std::cout << "redraws " << sim.redraws << '\n';
    std::cout << "ks_distance " << format_double(ks_distance(sim.values, law))
              << '\n';
    return 0;
  }
  // boundary
  const ClassifierModel model = load_model(boundary_model);
  if (model.dim() != 2)
    throw DimensionMismatch("boundary: model dimension must be 2, got " +
                            std::to_string(model.dim()));
  std::ofstream out(boundary_out);
  if (!out) throw ParseError("cannot write " + boundary_out);
  out << "x,y,log_ratio,label\n";
  for (int i = 0; i < boundary_grid; ++i)
    for (int j = 0; j < boundary_grid; ++j) {
      const double x = boundary_grid == 1
                           ? bx_min
                           : bx_min + (bx_max - bx_min) * i / (boundary_grid - 1);
      const double y = boundary_grid == 1
                           ? by_min
                           : by_min + (by_max - by_min) * j / (boundary_grid - 1);
      VectorXd p(2);
      p << x, y;
      const double lr = log_ratio(model, p);
      out << format_double(x) << ',' << format_double(y) << ','
          << format_double(lr) << ',' << (lr >= model.log_threshold ? 1 : 0)
          << '\n';
    }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const osr::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 2;
  } catch (const osr::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return 3;
  } catch (const osr::InternalError& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
