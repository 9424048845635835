// Copyright 2026 The fermipca Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: build, plan, calibrate, score, profile, density,
// trotter-check.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fermipca/fermipca.hpp"

namespace {

using namespace fermipca;
using io::Json;

constexpr int kExitValidation = 2;
constexpr int kExitNumeric = 3;

void warn(const std::string& msg) { std::cerr << "warning: " << msg << "\n"; }
void info(const std::string& msg) { std::cerr << msg << "\n"; }

struct ConfigOptions {
  double t1 = 1.0;
  double t2 = 1.0;
  double delta = 0.0;

  void add(CLI::App* app, bool required = true) {
    auto* a = app->add_option("--t1", t1, "control width T1");
    auto* b = app->add_option("--t2", t2, "evolution scale T2");
    app->add_option("--delta", delta, "control displacement");
    if (required) {
      a->required();
      b->required();
    }
  }

  MeasurementConfig config() const { return MeasurementConfig(t1, t2, delta); }
};

/// Evenly spaced grid covering every mixture component out to 12 T1.
std::vector<double> density_grid(const CovarianceModel& model, const MeasurementConfig& config, int points) {
  const double lo = config.shift(model.eigenvalues().minCoeff()) - 12.0 * config.t1;
  const double hi = config.shift(model.eigenvalues().maxCoeff()) + 12.0 * config.t1;
  std::vector<double> q(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) q[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (points - 1);
  return q;
}

std::string density_csv(const CovarianceModel& model, const MeasurementConfig& config, const ProbeState& probe,
                        int points) {
  std::string out = "q,f_C(q),F_C(q)\n";
  for (double q : density_grid(model, config, points)) {
    out += Json(q).dump() + "," + Json(position_density(model, config, probe, q)).dump() + "," +
           Json(position_cdf(model, config, probe, q)).dump() + "\n";
  }
  return out;
}

std::vector<int> all_ranks(Eigen::Index d) {
  std::vector<int> ks;
  for (int k = 1; k < d; ++k) ks.push_back(k);
  return ks;
}

// ---------------------------------------------------------------------------

struct BuildCmd {
  std::string data;
  std::string out;
  bool uncentered = false;

  void add(CLI::App& root) {
    auto* c = root.add_subcommand("build", "build a covariance model from a feature dataset");
    c->add_option("--data", data, "dataset (.csv or .json)")->required();
    c->add_option("--out", out, "output model file")->required();
    c->add_flag("--uncentered", uncentered, "use the uncentered average state instead of the centered covariance");
    c->add_flag("--centered", [this](std::int64_t) { uncentered = false; }, "centered covariance (default)");
    c->callback([this] { run(); });
  }

  void run() const {
    const FeatureDataset ds = io::load_dataset(data);
    const CovarianceModel model = uncentered ? build_uncentered_covariance(ds) : build_centered_covariance(ds);
    if (ds.size() == 1 && !uncentered) warn("single-sample dataset: centered covariance is identically zero");
    else if (!(model.total_variance() > 1e-14)) warn("model has zero total variance");
    io::RunManifest man;
    man.command = "build";
    man.add_input(data);
    man.outputs = {out};
    man.parameters = Json{{"centered", !uncentered}};
    Json doc = io::model_to_json(model);
    io::stamp(doc, man);
    io::write_text(out, io::dump(doc));
    info("model d=" + std::to_string(model.dimension()) + " N=" + std::to_string(ds.size()) +
         " V_C=" + Json(model.total_variance()).dump());
  }
};

struct PlanCmd {
  std::string task = "all-rank";
  Eigen::Index d = 2;
  double eta = 0.1;
  double delta_fail = 0.05;
  int rank = 1;
  double bracket_width = 1.0;
  std::string model;
  std::string out;

  void add(CLI::App& root) {
    auto* c = root.add_subcommand("plan", "sufficient sample counts for a calibration task");
    c->add_option("--task", task, "all-rank | fixed-rank | fractional | variance-profile | fixed-variance")
        ->check(CLI::IsMember({"all-rank", "fixed-rank", "fractional", "variance-profile", "fixed-variance"}));
    c->add_option("--d", d, "dimension");
    c->add_option("--eta", eta, "target accuracy")->required();
    c->add_option("--delta-fail", delta_fail, "failure probability")->required();
    c->add_option("--rank", rank, "K for fixed-rank");
    c->add_option("--bracket-width", bracket_width, "lambda bracket width for fixed-variance");
    c->add_option("--model", model, "model file; reports the raw LCU attempt factor and sets d");
    c->add_option("--out", out, "write the plan as JSON");
    c->callback([this] { run(); });
  }

  static PlanTask parse_task(const std::string& name, int rank, double width) {
    if (name == "all-rank") return AllRankTask{};
    if (name == "fixed-rank") return FixedRankTask{rank};
    if (name == "fractional") return FractionalTask{};
    if (name == "variance-profile") return VarianceProfileTask{};
    FixedVarianceTask t;
    t.bracket_width = width;
    return t;
  }

  void run() const {
    std::optional<CovarianceModel> m;
    SampleBudget b{eta, delta_fail, d, parse_task(task, rank, bracket_width)};
    if (!model.empty()) {
      m = io::load_model(model);
      b.d = m->dimension();
    }
    const SamplePlan plan = plan_samples(b);
    Json doc{{"task", task}, {"d", b.d}, {"eta", eta}, {"delta_fail", delta_fail},
             {"samples", plan.samples}, {"steps", plan.steps}, {"total", plan.total()},
             {"note", task == "fixed-variance" ? "sufficient, not tight" : "sufficient"}};
    if (m && m->total_variance() > 0.0) doc["raw_attempt_factor"] = raw_attempt_factor(*m);
    std::cout << doc.dump() << "\n";
    if (!out.empty()) io::write_text(out, io::dump(doc));
  }
};

struct CalibrateCmd {
  std::string model_path;
  std::string mode = "rank";
  ConfigOptions cfg;
  std::optional<std::uint64_t> samples;
  std::optional<double> eta;
  std::optional<double> delta_fail;
  std::uint64_t seed = 0;
  bool exact = false;
  std::vector<int> ks;
  std::vector<double> thetas;
  double theta = 0.5;
  std::string target = "normalized";
  double gamma = 0.0;
  std::string out;
  std::string density_out;
  std::string samples_out;
  int steps = 60;
  CLI::App* app = nullptr;

  void add(CLI::App& root) {
    auto* c = app = root.add_subcommand("calibrate", "calibrate thresholds from simulated position samples");
    c->add_option("--model", model_path, "model file")->required();
    c->add_option("--mode", mode, "rank | variance | fixed-variance")
        ->check(CLI::IsMember({"rank", "variance", "fixed-variance"}));
    cfg.add(c);
    c->add_option("--samples", samples, "sample count S (per bisection step for fixed-variance)");
    c->add_option("--eta", eta, "target accuracy; S then comes from the planner");
    c->add_option("--delta-fail", delta_fail, "failure probability for the planner");
    c->add_option("--seed", seed, "random seed");
    c->add_flag("--exact", exact, "population thresholds from exact distributions");
    c->add_option("--ks", ks, "ranks to calibrate (default 1..d-1)")->delimiter(',');
    c->add_option("--thetas", thetas, "retained-variance levels for variance mode")->delimiter(',');
    c->add_option("--theta", theta, "target for fixed-variance normalized mode");
    c->add_option("--target", target, "fixed-variance target: normalized | unnormalized")
        ->check(CLI::IsMember({"normalized", "unnormalized"}));
    c->add_option("--gamma", gamma, "unnormalized retained-variance target");
    c->add_option("--steps", steps, "fixed-variance bisection steps");
    c->add_option("--out", out, "output threshold file")->required();
    c->add_option("--density-csv", density_out, "write q,f_C(q),F_C(q) on a 512-point grid");
    c->add_option("--samples-out", samples_out, "write the raw position samples (float64 + .json sidecar)");
    c->callback([this] { run(); });
  }

  std::uint64_t sample_count(const CovarianceModel& model, const PlanTask& task) const {
    if (samples) {
      detail::require(*samples >= 1, "sample count must be at least 1");
      return *samples;
    }
    if (!eta || !delta_fail) throw ValidationError("give --samples, or --eta and --delta-fail, or --exact");
    const SamplePlan plan = plan_samples({*eta, *delta_fail, model.dimension(), task});
    info("planned S = " + std::to_string(plan.samples) +
         (plan.steps > 1 ? " per step, " + std::to_string(plan.steps) + " steps" : ""));
    return plan.samples;
  }

  void run() const {
    const CovarianceModel model = io::load_model(model_path);
    const MeasurementConfig config = cfg.config();
    io::RunManifest man;
    man.command = "calibrate";
    man.add_input(model_path);
    man.outputs = {out};
    for (const auto* o : {&density_out, &samples_out}) {
      if (!o->empty()) man.outputs.push_back(*o);
    }
    man.parameters = Json{{"mode", mode}, {"config", io::to_json(config)}, {"exact", exact}};

    Json doc;
    std::optional<ProbeState> probe;
    if (mode == "rank") {
      probe = ProbeState::maximally_mixed(model.dimension());
      const std::vector<int> want = ks.empty() ? all_ranks(model.dimension()) : ks;
      man.parameters["ks"] = want;
      RankThresholds t;
      if (exact) {
        t = calibrate_exact_ranks(model, config, want);
      } else {
        const std::uint64_t s = sample_count(model, AllRankTask{});
        const std::uint64_t stream = derive_seed(seed, "calibrate/rank");
        const PositionSampleSet set = sample_positions(model, config, *probe, s, stream);
        man.seed = seed;
        man.samples = s;
        if (!samples_out.empty()) io::save_samples(samples_out, set, &man);
        t = calibrate_ranks(EmpiricalCDF(set.samples), model.dimension(), want, config,
                            ThresholdSource::empirical(s, seed));
      }
      for (const auto& w : t.warnings) warn(w);
      doc = io::thresholds_to_json(t, model.fingerprint());
    } else if (mode == "variance") {
      probe = ProbeState::covariance(model);
      if (thetas.empty()) throw ValidationError("variance mode needs --thetas");
      man.parameters["thetas"] = thetas;
      VarianceThresholds t;
      if (exact) {
        t = calibrate_exact_variance(model, config, thetas);
      } else {
        const std::uint64_t s = sample_count(model, VarianceProfileTask{});
        const std::uint64_t stream = derive_seed(seed, "calibrate/variance");
        const PositionSampleSet set = sample_positions(model, config, *probe, s, stream);
        man.seed = seed;
        man.samples = s;
        if (!samples_out.empty()) io::save_samples(samples_out, set, &man);
        t = calibrate_variance(EmpiricalCDF(set.samples), thetas, config, ThresholdSource::empirical(s, seed));
        info("raw LCU attempts per successful probe sample: " + Json(raw_attempt_factor(model)).dump());
      }
      for (const auto& w : t.warnings) warn(w);
      doc = io::thresholds_to_json(t, model.fingerprint());
    } else {
      const bool normalized = target == "normalized";
      const double goal = normalized ? theta : gamma;
      FixedVarianceOptions opt;
      opt.mode = normalized ? VarianceTarget::normalized : VarianceTarget::unnormalized;
      opt.steps = steps;
      opt.seed = derive_seed(seed, "calibrate/fixed-variance");
      FixedVarianceTask task;
      task.theta = goal;
      task.t_prime = config.effective_temperature();
      task.bracket_width = 2.0 / model.eigenvalue(0);
      if (!exact) {
        opt.per_step_samples = sample_count(model, task);
        man.seed = seed;
        man.samples = opt.per_step_samples;
      }
      man.parameters["target"] = target;
      man.parameters["goal"] = goal;
      const FixedVarianceCalibration cal = fixed_variance_bisection(model, config, goal, opt);
      Json key = normalized ? Json{{"theta", goal}} : Json{{"gamma", goal}};
      key["beta"] = config.shift(1.0);
      doc = Json{{"kind", "fixed-variance"},
                 {"config", io::to_json(config)},
                 {"entries", Json::array({key})},
                 {"source", exact ? io::to_json(ThresholdSource::exact())
                                  : io::to_json(ThresholdSource::empirical(opt.per_step_samples, seed))},
                 {"model_hash", io::hex64(model.fingerprint())},
                 {"mode", target},
                 {"lambda_hat", cal.lambda_hat},
                 {"t_prime", config.effective_temperature()},
                 {"bracket", Json::array({cal.bracket.lower, cal.bracket.upper})},
                 {"expansions", cal.expansions}};
      info("lambda_hat = " + Json(cal.lambda_hat).dump());
      probe = ProbeState::covariance(model);
    }
    io::stamp(doc, man);
    io::write_text(out, io::dump(doc));
    if (!density_out.empty()) io::write_text(density_out, density_csv(model, config, *probe, 512));
  }
};

/// Occupations and label for every entry of a threshold file.
std::vector<std::pair<std::string, RVector>> filters_from(const CovarianceModel& model, const io::ThresholdFile& t) {
  std::vector<std::pair<std::string, RVector>> out;
  for (const auto& [key, beta] : t.entries) {
    std::string label;
    if (key.contains("k")) label = "k=" + std::to_string(key["k"].get<int>());
    else if (key.contains("theta")) label = "theta=" + Json(key["theta"]).dump();
    else label = "gamma=" + Json(key["gamma"]).dump();
    if (t.kind == "fixed-variance") {
      const double lambda = t.extra.at("lambda_hat").get<double>();
      out.emplace_back(label, fixed_variance_occupations(model.eigenvalues(), t.config.effective_temperature(), lambda));
    } else {
      out.emplace_back(label, effect_from_threshold(model, t.config, beta).occupations);
    }
  }
  return out;
}

struct DeployCheck {
  std::optional<double> t1;
  std::optional<double> t2;
  std::optional<double> delta;

  void add(CLI::App* c) {
    c->add_option("--t1", t1, "deployment T1; must match the thresholds");
    c->add_option("--t2", t2, "deployment T2; must match the thresholds");
    c->add_option("--delta", delta, "deployment delta; must match the thresholds");
  }

  void verify(const CovarianceModel& model, const io::ThresholdFile& t) const {
    if (t.model_hash != model.fingerprint()) throw ValidationError("thresholds were calibrated for a different model");
    if (!t1 && !t2 && !delta) return;
    const MeasurementConfig deploy(t1.value_or(t.config.t1), t2.value_or(t.config.t2), delta.value_or(t.config.delta));
    if (io::config_hash(deploy) != io::config_hash(t.config)) {
      throw ValidationError("deployment configuration differs from the calibration configuration");
    }
  }
};

struct ScoreCmd {
  std::string model_path;
  std::string thresholds_path;
  std::string inputs_path;
  std::uint64_t shots = 0;
  std::uint64_t seed = 0;
  std::string out;
  DeployCheck deploy;

  void add(CLI::App& root) {
    auto* c = root.add_subcommand("score", "score inputs against calibrated thresholds");
    c->add_option("--model", model_path, "model file")->required();
    c->add_option("--thresholds", thresholds_path, "threshold file")->required();
    c->add_option("--inputs", inputs_path, "input vectors (.csv or .json)")->required();
    c->add_option("--shots", shots, "0 for exact scores, otherwise Monte Carlo shots per score");
    c->add_option("--seed", seed, "random seed");
    c->add_option("--out", out, "score report")->required();
    deploy.add(c);
    c->callback([this] { run(); });
  }

  void run() const {
    const CovarianceModel model = io::load_model(model_path);
    const io::ThresholdFile t = io::load_thresholds(thresholds_path);
    deploy.verify(model, t);
    const std::vector<CVector> inputs = io::load_vectors(inputs_path);
    const auto filters = filters_from(model, t);

    // Monte Carlo runs the measurement on the data operator the filter was
    // calibrated for: lambda C for fixed-variance thresholds.
    std::optional<CovarianceModel> mc_model;
    std::vector<double> mc_beta;
    if (shots > 0) {
      if (t.kind == "fixed-variance") {
        const double lambda = t.extra.at("lambda_hat").get<double>();
        if (!(lambda > 0.0)) throw ValidationError("Monte Carlo scoring needs a positive lambda_hat");
        mc_model = CovarianceModel::from_decomposition(lambda * model.matrix(), lambda * model.eigenvalues(),
                                                       model.eigenvectors(), model.mean_vector());
      } else {
        mc_model = model;
      }
      for (const auto& e : t.entries) mc_beta.push_back(e.second);
    }

    io::RunManifest man;
    man.command = "score";
    man.add_input(model_path);
    man.add_input(thresholds_path);
    man.add_input(inputs_path);
    man.outputs = {out};
    man.parameters = Json{{"shots", shots}};
    if (shots > 0) man.seed = seed;

    const std::optional<RankThresholds> ladder = t.rank();
    const bool full_ladder = ladder && static_cast<Eigen::Index>(ladder->thresholds.size()) == model.dimension() - 1;
    Json records = Json::array();
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const CenteredInput in = prepare_input(model, inputs[i]);
      Json rec{{"index", i}, {"nu", in.nu}, {"degenerate", in.degenerate()}};
      Json scores = Json::array();
      for (std::size_t f = 0; f < filters.size(); ++f) {
        const Score exact_score = score(model, filters[f].second, in);
        if (shots == 0) {
          scores.push_back(io::to_json(exact_score, filters[f].first));
          continue;
        }
        if (!model.centered()) throw ValidationError("Monte Carlo scoring needs a centered model");
        const std::uint64_t stream = derive_seed(seed, "score/" + std::to_string(i) + "/" + std::to_string(f));
        const JointEstimate est = joint_score_estimate(*mc_model, t.config, mc_beta[f], inputs[i], shots, stream);
        Json s{{"label", filters[f].first},
               {"s", 4.0 * est.p_joint},
               {"s_bar", est.normalized ? Json(*est.normalized) : Json(nullptr)},
               {"p_joint", est.p_joint},
               {"p_success", est.p_success},
               {"successes", est.successes},
               {"exact_s", exact_score.s},
               {"exact_s_bar", exact_score.normalized ? Json(*exact_score.normalized) : Json(nullptr)}};
        scores.push_back(s);
      }
      rec["scores"] = scores;
      if (full_ladder) rec["profile"] = io::to_json(spectral_profile(model, *ladder, in));
      records.push_back(rec);
    }
    Json doc{{"kind", "score"}, {"threshold_kind", t.kind}, {"inputs", records}};
    io::stamp(doc, man);
    io::write_text(out, io::dump(doc));
  }
};

struct ProfileCmd {
  std::string model_path;
  std::string thresholds_path;
  std::string inputs_path;
  std::string out;
  DeployCheck deploy;

  void add(CLI::App& root) {
    auto* c = root.add_subcommand("profile", "soft spectral energy profiles from a full rank ladder");
    c->add_option("--model", model_path, "model file")->required();
    c->add_option("--thresholds", thresholds_path, "rank threshold file with k = 1..d-1")->required();
    c->add_option("--inputs", inputs_path, "input vectors (.csv or .json)")->required();
    c->add_option("--out", out, "profile report")->required();
    deploy.add(c);
    c->callback([this] { run(); });
  }

  void run() const {
    const CovarianceModel model = io::load_model(model_path);
    const io::ThresholdFile t = io::load_thresholds(thresholds_path);
    deploy.verify(model, t);
    const std::optional<RankThresholds> ladder = t.rank();
    if (!ladder) throw ValidationError("profile needs rank thresholds");
    const std::vector<CVector> inputs = io::load_vectors(inputs_path);
    io::RunManifest man;
    man.command = "profile";
    man.add_input(model_path);
    man.add_input(thresholds_path);
    man.add_input(inputs_path);
    man.outputs = {out};
    Json records = Json::array();
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      const CenteredInput in = prepare_input(model, inputs[i]);
      const ScoreProfile p = spectral_profile(model, *ladder, in);
      Json cumulative = Json::array();
      for (const auto& [k, s] : p.cumulative) cumulative.push_back(io::to_json(s, "k=" + std::to_string(k)));
      Json rec{{"index", i}, {"nu", in.nu}, {"degenerate", in.degenerate()}, {"profile", io::to_json(p)},
               {"cumulative", cumulative}, {"residual_nu_minus_s", Json::array()}};
      for (const auto& [k, s] : p.cumulative) rec["residual_nu_minus_s"].push_back(s.residual());
      records.push_back(rec);
    }
    Json doc{{"kind", "profile"}, {"inputs", records}};
    io::stamp(doc, man);
    io::write_text(out, io::dump(doc));
  }
};

struct DensityCmd {
  std::string model_path;
  ConfigOptions cfg;
  std::string probe = "mixed";
  int points = 512;
  std::string out;

  void add(CLI::App& root) {
    auto* c = root.add_subcommand("density", "exact position density and CDF on a grid");
    c->add_option("--model", model_path, "model file")->required();
    cfg.add(c);
    c->add_option("--probe", probe, "mixed | covariance")->check(CLI::IsMember({"mixed", "covariance"}));
    c->add_option("--points", points, "grid points")->check(CLI::Range(2, 1 << 20));
    c->add_option("--out", out, "CSV output (stdout when omitted)");
    c->callback([this] { run(); });
  }

  void run() const {
    const CovarianceModel model = io::load_model(model_path);
    const ProbeState p = probe == "mixed" ? ProbeState::maximally_mixed(model.dimension()) : ProbeState::covariance(model);
    const std::string csv = density_csv(model, cfg.config(), p, points);
    if (out.empty()) std::cout << csv;
    else io::write_text(out, csv);
  }
};

struct TrotterCmd {
  std::string model_path;
  double momentum = 1.0;
  double t2 = 1.0;
  std::vector<int> rounds{8, 16, 32, 64, 128, 256, 512, 1024};
  std::string out;

  void add(CLI::App& root) {
    auto* c = root.add_subcommand("trotter-check", "product-formula error of the selector-swap rounds");
    c->add_option("--model", model_path, "centered model file")->required();
    c->add_option("--p", momentum, "scalar momentum");
    c->add_option("--t2", t2, "evolution scale T2");
    c->add_option("--rounds", rounds, "round counts")->delimiter(',');
    c->add_option("--out", out, "CSV output (stdout when omitted)");
    c->callback([this] { run(); });
  }

  void run() const {
    const CovarianceModel model = io::load_model(model_path);
    std::string csv = "R,error\n";
    std::vector<double> x, y;
    for (int r : rounds) {
      const double e = trotter_round_error(model, momentum, r, t2);
      csv += std::to_string(r) + "," + Json(e).dump() + "\n";
      if (e > 0.0) {
        x.push_back(std::log(static_cast<double>(r)));
        y.push_back(std::log(e));
      }
    }
    if (out.empty()) std::cout << csv;
    else io::write_text(out, csv);
    if (x.size() >= 2) {
      double mx = 0, my = 0;
      for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
      mx /= static_cast<double>(x.size());
      my /= static_cast<double>(y.size());
      double sxy = 0, sxx = 0;
      for (std::size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
      info("log-log slope = " + Json(sxy / sxx).dump());
    }
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fermipca: measurement-based soft principal component analysis"};
  app.set_version_flag("--version", FERMIPCA_VERSION);
  app.require_subcommand(1);
  BuildCmd build;
  PlanCmd plan;
  CalibrateCmd calibrate;
  ScoreCmd score_cmd;
  ProfileCmd profile;
  DensityCmd density;
  TrotterCmd trotter;
  build.add(app);
  plan.add(app);
  calibrate.add(app);
  score_cmd.add(app);
  profile.add(app);
  density.add(app);
  trotter.add(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  } catch (const fermipca::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const fermipca::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return 0;
}
