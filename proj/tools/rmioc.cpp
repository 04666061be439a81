/*
 Copyright 2026 The rmioc Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

// Command-line front end for trajectory generation, single-window recovery,
// the KKT comparison and the sweep studies.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "rmioc/harness.hpp"

namespace fs = std::filesystem;
using namespace rmioc;

namespace {

struct Options {
  std::string config;
  std::optional<double> gamma;
  std::optional<double> sigma;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> trials;
  std::optional<int> threads;
  bool paper_scale = false;
  bool check = false;
  int start = 1;
};

ExperimentConfig resolve(const Options& o, SystemKind fallback) {
  ExperimentConfig c;
  if (!o.config.empty()) {
    c = load_config(o.config);
  } else {
    c = fallback == SystemKind::Lqr ? ExperimentConfig::lqr() : ExperimentConfig::arm();
  }
  if (o.paper_scale) {
    if (c.system != SystemKind::Arm) throw std::invalid_argument("--paper-scale applies to the arm only");
    c.scale_to_full();
  }
  if (o.gamma) c.gamma = *o.gamma;
  if (o.sigma) c.sigmas = {*o.sigma};
  if (o.seed) c.seed = *o.seed;
  if (o.out) c.out = *o.out;
  if (o.trials) c.trials = *o.trials;
  if (o.threads) c.threads = *o.threads;
  c.validate();
  return c;
}

void write_config(const ExperimentConfig& c) {
  write_text_file(fs::path(c.out) / "config.json", to_json(c).dump(2) + "\n");
}

int report_checks(const std::vector<CheckResult>& checks, bool enforce, nlohmann::json& doc) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& chk : checks) {
    std::cout << (chk.passed ? "PASS " : "FAIL ") << chk.name;
    if (!chk.detail.empty()) std::cout << "  [" << chk.detail << "]";
    std::cout << '\n';
    arr.push_back({{"name", chk.name}, {"passed", chk.passed}, {"detail", chk.detail}});
  }
  doc["checks"] = arr;
  return enforce && !all_passed(checks) ? 1 : 0;
}

int cmd_generate(const Options& o, SystemKind kind) {
  ExperimentConfig c = resolve(o, kind);
  if (c.system != kind) throw std::invalid_argument("config describes the other system");
  fs::create_directories(c.out);
  write_config(c);
  if (kind == SystemKind::Arm) {
    const TranscriptionResult sol = solve_arm_task(arm_task(c));
    save_trajectory_csv((fs::path(c.out) / "trajectory.csv").string(), sol.trajectory);
    write_text_file(fs::path(c.out) / "solver_log.jsonl",
                    render([&](std::ostream& os) { write_solver_log(os, sol.log); }));
    std::cout << "arm trajectory: T=" << c.T << ", " << sol.iterations << " Newton iterations, residual "
              << sol.residual << '\n';
  } else {
    save_trajectory_csv((fs::path(c.out) / "trajectory.csv").string(), generate_trajectory(c));
    std::cout << "LQR trajectory: T=" << c.T << '\n';
  }
  return 0;
}

int cmd_recover(const Options& o) {
  const ExperimentConfig c = resolve(o, SystemKind::Lqr);
  const double sigma = c.sigmas.front();
  const Trajectory clean = generate_trajectory(c);
  const Scenario s = make_scenario(c, clean, sigma, c.recovery_features());
  if (o.start < 1 || o.start > s.last) {
    throw std::invalid_argument("--start must lie in [1, " + std::to_string(s.last) + "]");
  }
  const MinimalObservationOptions opts{c.gamma, s.last - o.start + 1};
  RecoveryReport rep =
      minimal_observation_ioc(TrajectorySource(s.trajectory, s.system, s.features, s.last), o.start, opts);
  if (rep.recovered()) rep.e_omega = recovery_error(rep.omega, s.truth);

  fs::create_directories(c.out);
  write_config(c);
  save_trajectory_csv((fs::path(c.out) / "trajectory.csv").string(), s.trajectory);
  write_text_file(fs::path(c.out) / "kappa.csv",
                  render([&](std::ostream& os) { write_kappa_csv(os, rep.kappa_history); }));

  std::cout << "t=" << rep.t << " status=" << to_string(rep.status) << " l_min=" << rep.l_min;
  if (rep.e_omega) std::cout << " e_omega=" << *rep.e_omega;
  std::cout << '\n';

  std::vector<CheckResult> checks;
  checks.push_back({"recovered", rep.recovered(), to_string(rep.status)});
  if (rep.recovered() && sigma == 0.0) {
    checks.push_back({"noiseless e_omega < 0.01", *rep.e_omega < 0.01, detail::format_double(*rep.e_omega)});
  }
  nlohmann::json doc = to_json(rep);
  const int code = report_checks(checks, o.check, doc);
  write_text_file(fs::path(c.out) / "report.json", doc.dump(2) + "\n");
  return code;
}

int cmd_compare(const Options& o) {
  const ExperimentConfig c = resolve(o, SystemKind::Lqr);
  if (c.system != SystemKind::Lqr) throw std::invalid_argument("compare-kkt runs on the LQR system");
  const auto table = run_lqr_comparison(c);
  fs::create_directories(c.out);
  write_config(c);
  write_text_file(fs::path(c.out) / "comparison.csv",
                  render([&](std::ostream& os) { write_comparison_csv(os, table); }));

  std::vector<CheckResult> checks;
  std::optional<int> first;
  for (const auto& p : table) {
    if (p.start == 1 && !first && p.e_recovery < 0.01) first = p.l;
  }
  checks.push_back({"recovery from t=1 reaches e_omega < 0.01 by l <= 25", first && *first <= 25,
                    first ? "first l = " + std::to_string(*first) : "never"});
  nlohmann::json doc;
  doc["rows"] = table.size();
  const int code = report_checks(checks, o.check, doc);
  write_text_file(fs::path(c.out) / "report.json", doc.dump(2) + "\n");
  return code;
}

enum class Study { Noise, Features, Gamma };

int cmd_sweep(const Options& o, Study study) {
  const ExperimentConfig c = resolve(o, SystemKind::Arm);
  const Trajectory clean = generate_trajectory(c);
  std::vector<StudyRow> rows;
  std::vector<CheckResult> checks;
  switch (study) {
    case Study::Noise:
      rows = run_noise_sweep(c, clean);
      checks = check_noise_study(rows);
      break;
    case Study::Features:
      rows = run_feature_sweep(c, clean);
      checks = check_feature_study(c, rows);
      break;
    case Study::Gamma:
      rows = run_gamma_sweep(c, clean);
      checks = check_gamma_study(rows);
      break;
  }

  fs::create_directories(c.out);
  write_config(c);
  save_trajectory_csv((fs::path(c.out) / "trajectory.csv").string(), clean);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    write_text_file(fs::path(c.out) / ("records_" + rows[i].label + "_" + std::to_string(i) + ".csv"),
                    render([&](std::ostream& os) { write_records_csv(os, rows[i].sweep); }));
  }
  write_text_file(fs::path(c.out) / "aggregate.csv",
                  render([&](std::ostream& os) { write_aggregate_csv(os, rows); }));

  for (const auto& row : rows) {
    std::cout << row.label << '=' << detail::format_double(row.value) << ": " << row.sweep.recovered << '/'
              << row.sweep.records.size() << " recovered, mean l_min " << detail::format_double(row.sweep.mean_l_min)
              << ", mean e_omega " << detail::format_double(row.sweep.mean_e_omega) << '\n';
  }
  nlohmann::json doc;
  doc["study"] = rows.empty() ? "" : rows.front().label;
  const int code = report_checks(checks, o.check, doc);
  write_text_file(fs::path(c.out) / "report.json", doc.dump(2) + "\n");
  return code;
}

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config, "experiment config (JSON)")->check(CLI::ExistingFile);
  sub->add_option("--gamma", o.gamma, "rank-index threshold");
  sub->add_option("--sigma", o.sigma, "single noise level (state units)");
  sub->add_option("--seed", o.seed, "root RNG seed");
  sub->add_option("--out", o.out, "output directory");
  sub->add_option("--trials", o.trials, "noise realisations per level");
  sub->add_option("--threads", o.threads, "worker threads for start-time sweeps");
  sub->add_flag("--paper-scale", o.paper_scale, "arm at T=2000, dt=1/2000");
  sub->add_flag("--check", o.check, "exit nonzero when a check fails");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Recovery-matrix inverse optimal control"};
  app.require_subcommand(1);
  Options o;

  auto* gen_lqr = app.add_subcommand("generate-lqr", "solve the LQR instance and write its trajectory");
  auto* gen_arm = app.add_subcommand("generate-arm", "solve the arm reach and write trajectory and solver log");
  auto* recover = app.add_subcommand("recover", "minimal-observation recovery from one start time");
  auto* compare = app.add_subcommand("compare-kkt", "recovery matrix vs KKT baseline on growing windows");
  auto* noise = app.add_subcommand("sweep-noise", "start-time sweeps over noise levels");
  auto* features = app.add_subcommand("sweep-features", "start-time sweeps over nested candidate sets");
  auto* gamma = app.add_subcommand("sweep-gamma", "start-time sweeps over thresholds");
  for (auto* sub : {gen_lqr, gen_arm, recover, compare, noise, features, gamma}) add_common(sub, o);
  recover->add_option("--start", o.start, "first observed time index")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen_lqr->parsed()) return cmd_generate(o, SystemKind::Lqr);
    if (gen_arm->parsed()) return cmd_generate(o, SystemKind::Arm);
    if (recover->parsed()) return cmd_recover(o);
    if (compare->parsed()) return cmd_compare(o);
    if (noise->parsed()) return cmd_sweep(o, Study::Noise);
    if (features->parsed()) return cmd_sweep(o, Study::Features);
    if (gamma->parsed()) return cmd_sweep(o, Study::Gamma);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
