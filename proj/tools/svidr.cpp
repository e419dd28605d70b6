// svidr command-line tool: fit, simulate, evaluate, replicate.
//
// Exit codes: 0 ok, 2 configuration error, 3 data error, 4 numerical failure.

#include <CLI11.hpp>
#include <filesystem>
#include <future>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include "svidr/evaluation.hpp"
#include "svidr/inference.hpp"
#include "svidr/io.hpp"
#include "svidr/reference.hpp"
#include "svidr/simgen.hpp"

namespace fs = std::filesystem;
using svidr::json;
using svidr::Vec;

namespace {

constexpr std::size_t kEvalDraws = 4000;

void require_keys(const json& obj, const std::string& where,
                  const std::vector<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end())
      throw svidr::ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

template <class T>
T get_or(const json& obj, const std::string& key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw svidr::ConfigError(key + ": " + e.what());
  }
}

std::string fmt(double v) { return svidr::detail::fmt_double(v); }

std::string sanitize(const std::string& s) {
  std::string out;
  for (char c : s) out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out;
}

svidr::TermSpec parse_term(const json& t, const std::string& where) {
  require_keys(t, where, {"type", "covariate", "num_knots", "degree", "penalty_order"});
  svidr::TermSpec term;
  const std::string type = get_or<std::string>(t, "type", "");
  if (type == "linear")
    term.kind = svidr::TermSpec::Kind::linear;
  else if (type == "pspline")
    term.kind = svidr::TermSpec::Kind::pspline;
  else
    throw svidr::ConfigError(where + ": type must be 'linear' or 'pspline'");
  term.covariate = get_or<std::string>(t, "covariate", "");
  if (term.covariate.empty()) throw svidr::ConfigError(where + ": covariate required");
  term.num_knots = get_or<int>(t, "num_knots", 10);
  term.degree = get_or<int>(t, "degree", 3);
  term.penalty_order = get_or<int>(t, "penalty_order", 2);
  return term;
}

svidr::ModelSpec parse_model(const json& cfg) {
  svidr::ModelSpec spec;
  const std::string fam = get_or<std::string>(cfg, "family", "");
  if (fam.empty()) throw svidr::ConfigError("family: required");
  spec.family = svidr::family_from_name(fam);
  spec.known_sd = get_or<double>(cfg, "known_sd", 1.0);
  spec.hyper_concentration = get_or<double>(cfg, "hyper_concentration", 1.0);
  spec.hyper_rate = get_or<double>(cfg, "hyper_rate", 0.01);

  const auto pnames = svidr::family_param_names(spec.family);
  spec.params.resize(pnames.size());
  if (cfg.contains("terms")) {
    const json& terms = cfg.at("terms");
    require_keys(terms, "terms", pnames);
    for (std::size_t p = 0; p < pnames.size(); ++p) {
      if (!terms.contains(pnames[p])) continue;
      for (const auto& t : terms.at(pnames[p]))
        spec.params[p].terms.push_back(parse_term(t, "terms." + pnames[p]));
    }
  }
  return spec;
}

svidr::FitConfig parse_fit_config(const json& cfg, std::optional<std::uint64_t> seed_flag) {
  svidr::FitConfig fc;
  fc.family = svidr::vfamily_from_name(get_or<std::string>(cfg, "variational", "svi_local"));
  fc.tau_mode = get_or<std::string>(cfg, "tau_mode", "point") == "hyper"
                    ? svidr::TauMode::hyper
                    : svidr::TauMode::point;
  fc.bd_correction = get_or<bool>(cfg, "bd_correction", false);
  fc.epochs = get_or<int>(cfg, "epochs", 8000);
  fc.elbo_samples = get_or<int>(cfg, "elbo_samples", 64);
  fc.beta_samples = get_or<int>(cfg, "beta_samples", 32);
  fc.tau_samples = get_or<int>(cfg, "tau_samples", 2);
  fc.stage1_epochs = get_or<int>(cfg, "stage1_epochs", -1);
  fc.learning_rate = get_or<double>(cfg, "learning_rate", 0.01);
  fc.learning_rate_decay = get_or<double>(cfg, "learning_rate_decay", 1.0);
  fc.stick_the_landing = get_or<bool>(cfg, "stick_the_landing", false);
  fc.seed = seed_flag.value_or(get_or<std::uint64_t>(cfg, "seed", 0));
  fc.checkpoint_epochs = get_or<std::vector<int>>(cfg, "checkpoint_epochs", {});
  if (fc.epochs < 0) throw svidr::ConfigError("epochs: must be >= 0");
  if (fc.elbo_samples < 1) throw svidr::ConfigError("elbo_samples: must be >= 1");
  return fc;
}

void write_manifest(const fs::path& out, const std::string& command, const json& resolved) {
  json m;
  m["command"] = command;
  m["config"] = resolved;
  svidr::atomic_write(out / "run_manifest.json", m.dump(2) + "\n");
}

void write_elbo_trace(const fs::path& path, const svidr::FitResult& r) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t e = 0; e < r.elbo_trace.size(); ++e)
    rows.push_back({std::to_string(e + 1), fmt(r.elbo_trace[e]), fmt(r.elbo_se_trace[e])});
  svidr::write_table_csv(path, {"epoch", "elbo", "se"}, rows);
}

void write_summary(const fs::path& path, const std::vector<svidr::CoordinateSummary>& s) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& c : s)
    rows.push_back(
        {c.label, fmt(c.mean), fmt(c.sd), fmt(c.q025), fmt(c.q50), fmt(c.q975)});
  svidr::write_table_csv(path, {"label", "mean", "sd", "q2.5", "q50", "q97.5"}, rows);
}

void write_effects(const fs::path& out, const svidr::Model& m,
                   const svidr::GaussianPosterior& post) {
  for (const auto& block : m.design.blocks) {
    if (!block.is_spline) continue;
    Vec<double> grid;
    const std::size_t n_pts = 50;
    for (std::size_t g = 0; g < n_pts; ++g)
      grid.push_back(block.basis.x_min +
                     (block.basis.x_max - block.basis.x_min) * g / (n_pts - 1));
    auto curve = svidr::effect_curve(post, block, grid);
    const std::string stem = "effect_" + sanitize(block.label);
    std::vector<std::vector<std::string>> rows;
    for (std::size_t g = 0; g < grid.size(); ++g)
      rows.push_back(
          {fmt(grid[g]), fmt(curve.mean[g]), fmt(curve.lower[g]), fmt(curve.upper[g])});
    svidr::write_table_csv(out / (stem + ".csv"), {"x", "mean", "lower", "upper"}, rows);

    svidr::SvgSeries line{block.label, curve.mean, "#1f6fb4"};
    svidr::SvgBand band{curve.lower, curve.upper, "#1f6fb4"};
    svidr::write_svg(out / (stem + ".svg"), block.label, grid, {line}, &band);
  }
}

json resolved_fit_config(const json& cfg, const svidr::FitConfig& fc) {
  json r = cfg;
  r["seed"] = fc.seed;
  r["epochs"] = fc.epochs;
  r["elbo_samples"] = fc.elbo_samples;
  r["variational"] = svidr::vfamily_name(fc.family);
  return r;
}

int cmd_fit(const json& cfg, const fs::path& out, std::optional<std::uint64_t> seed_flag) {
  require_keys(cfg, "config",
               {"data", "family", "known_sd", "hyper_concentration", "hyper_rate", "terms",
                "variational", "tau_mode", "bd_correction", "epochs", "elbo_samples",
                "beta_samples", "tau_samples", "stage1_epochs", "learning_rate",
                "learning_rate_decay", "stick_the_landing", "seed", "checkpoint_epochs",
                "effects"});
  const std::string data_path = get_or<std::string>(cfg, "data", "");
  if (data_path.empty()) throw svidr::ConfigError("data: required");

  svidr::ModelSpec spec = parse_model(cfg);
  svidr::FitConfig fc = parse_fit_config(cfg, seed_flag);
  svidr::Dataset data = svidr::read_csv(data_path);
  svidr::Model model = svidr::build_model(spec, data);

  svidr::FitResult r = svidr::fit(model, fc);
  if (r.diverged) {
    write_elbo_trace(out / "elbo_trace.csv", r);
    throw svidr::NonFiniteObjective("fit diverged after epoch " +
                                    std::to_string(r.epochs_run));
  }

  svidr::PosteriorArtifact artifact;
  artifact.posterior = r.posterior;
  artifact.labels = r.labels;
  artifact.tau_hat = r.tau_hat;
  artifact.tau_labels = model.design.tau_labels;
  artifact.has_tau_variational = r.has_tau_variational;
  artifact.tau_variational = r.tau_variational;
  svidr::write_posterior(out / "posterior.json", artifact);

  write_elbo_trace(out / "elbo_trace.csv", r);
  // summary over the beta coordinates only (classic_joint appends tau)
  svidr::GaussianPosterior beta_post = r.posterior;
  write_summary(out / "summary.csv", svidr::posterior_summary(beta_post, r.labels));
  if (get_or<bool>(cfg, "effects", true) && fc.family != svidr::VFamily::classic_joint)
    write_effects(out, model, r.posterior);

  write_manifest(out, "fit", resolved_fit_config(cfg, fc));
  std::cout << "fit: " << r.epochs_run << " epochs, final elbo "
            << (r.elbo_trace.empty() ? 0.0 : r.elbo_trace.back()) << "\n";
  return 0;
}

int cmd_simulate(const json& cfg, const fs::path& out,
                 std::optional<std::uint64_t> seed_flag) {
  require_keys(cfg, "config", {"scenario", "n", "seed"});
  const std::string scenario = get_or<std::string>(cfg, "scenario", "");
  const std::size_t n = get_or<std::size_t>(cfg, "n", 0);
  if (n < 1) throw svidr::ConfigError("n: must be >= 1");
  const std::uint64_t seed = seed_flag.value_or(get_or<std::uint64_t>(cfg, "seed", 0));

  json meta;
  meta["scenario"] = scenario;
  meta["n"] = n;
  meta["seed"] = seed;
  if (scenario == "logistic") {
    auto sc = svidr::gen_logistic(n, seed);
    svidr::write_csv(out / "data.csv", sc.data);
    meta["clamp_rate"] = sc.clamp_rate;
    meta["constants"] = {{"rho", -0.7},
                         {"mixture_weights", {0.45, 0.10, 0.45}},
                         {"frequency", 1.75}};
  } else if (scenario == "gamma") {
    auto sc = svidr::gen_gamma(n, seed);
    svidr::write_csv(out / "data.csv", sc.data);
    meta["constants"] = {{"mean", "3 + exp(sin(1.75x))"}, {"variance", "exp(cos(-2x))^2"}};
  } else {
    throw svidr::ConfigError("scenario: must be 'logistic' or 'gamma'");
  }
  svidr::atomic_write(out / "metadata.json", meta.dump(2) + "\n");
  json resolved = cfg;
  resolved["seed"] = seed;
  write_manifest(out, "simulate", resolved);
  std::cout << "simulate: wrote " << n << " rows\n";
  return 0;
}

// Load a sample set either from a Gaussian posterior artifact (drawing
// kEvalDraws reparameterized samples) or from a CSV of draws.
svidr::SampleSet load_samples(const std::string& path, std::uint64_t seed) {
  if (path.size() > 5 && path.substr(path.size() - 5) == ".json") {
    auto artifact = svidr::read_posterior(path);
    svidr::Rng rng(seed);
    return svidr::draw_samples(artifact.posterior, artifact.labels, kEvalDraws, rng);
  }
  svidr::Dataset d = svidr::read_csv(path);
  svidr::SampleSet s;
  s.labels = d.names;
  s.draws = svidr::Mat<double>(d.n, d.names.size());
  for (std::size_t j = 0; j < d.columns.size(); ++j)
    for (std::size_t i = 0; i < d.n; ++i) s.draws(i, j) = d.columns[j][i];
  return s;
}

int cmd_evaluate(const json& cfg, const fs::path& out,
                 std::optional<std::uint64_t> seed_flag) {
  require_keys(cfg, "config", {"a", "b", "seed"});
  const std::string a_path = get_or<std::string>(cfg, "a", "");
  const std::string b_path = get_or<std::string>(cfg, "b", "");
  if (a_path.empty() || b_path.empty())
    throw svidr::ConfigError("a, b: both artifact paths required");
  const std::uint64_t seed = seed_flag.value_or(get_or<std::uint64_t>(cfg, "seed", 0));

  auto a = load_samples(a_path, svidr::derive_seed(seed, 1));
  auto b = load_samples(b_path, svidr::derive_seed(seed, 2));
  auto report = svidr::wasserstein1_marginals(a, b, svidr::derive_seed(seed, 3));

  std::vector<std::vector<std::string>> rows;
  for (std::size_t j = 0; j < a.labels.size(); ++j)
    rows.push_back({a.labels[j], fmt(report.per_coordinate[j])});
  rows.push_back({"aggregate", fmt(report.aggregate)});
  svidr::write_table_csv(out / "wd.csv", {"label", "w1"}, rows);
  json resolved = cfg;
  resolved["seed"] = seed;
  write_manifest(out, "evaluate", resolved);
  std::cout << "evaluate: aggregate W1 = " << report.aggregate << "\n";
  return 0;
}

struct ReplicateRow {
  std::size_t replicate;
  std::string variant;
  int checkpoint;
  double w1;
  std::string error;
};

int cmd_replicate(const json& cfg, const fs::path& out,
                  std::optional<std::uint64_t> seed_flag) {
  require_keys(cfg, "config",
               {"scenario", "n", "replicates", "variants", "checkpoints", "epochs",
                "elbo_samples", "learning_rate", "seed", "reference_draws",
                "reference_warmup", "threads"});
  const std::string scenario = get_or<std::string>(cfg, "scenario", "logistic");
  const std::size_t n = get_or<std::size_t>(cfg, "n", 200);
  const std::size_t n_rep = get_or<std::size_t>(cfg, "replicates", 10);
  const std::vector<std::string> variants =
      get_or<std::vector<std::string>>(cfg, "variants", {"svi_local"});
  const std::vector<int> checkpoints =
      get_or<std::vector<int>>(cfg, "checkpoints", {100, 500, 1000, 2000});
  const int epochs = get_or<int>(cfg, "epochs", *std::max_element(checkpoints.begin(),
                                                                  checkpoints.end()));
  const int elbo_samples = get_or<int>(cfg, "elbo_samples", 32);
  const std::uint64_t seed = seed_flag.value_or(get_or<std::uint64_t>(cfg, "seed", 0));
  const std::size_t ref_draws = get_or<std::size_t>(cfg, "reference_draws", 50000);
  const std::size_t ref_warmup = get_or<std::size_t>(cfg, "reference_warmup", 5000);

  auto run_one = [&](std::size_t rep) -> std::vector<ReplicateRow> {
    std::vector<ReplicateRow> rows;
    try {
      const std::uint64_t rep_seed = svidr::derive_seed(seed, 1000 + rep);
      svidr::Dataset data;
      svidr::ModelSpec spec;
      if (scenario == "logistic") {
        data = svidr::gen_logistic(n, rep_seed).data;
        spec.family = svidr::FamilyKind::bernoulli_logit;
        spec.params.resize(1);
        for (const char* cov : {"x1", "x2"}) {
          svidr::TermSpec t;
          t.kind = svidr::TermSpec::Kind::pspline;
          t.covariate = cov;
          spec.params[0].terms.push_back(t);
        }
      } else if (scenario == "gamma") {
        data = svidr::gen_gamma(n, rep_seed).data;
        spec.family = svidr::FamilyKind::gamma_meanvar;
        spec.params.resize(2);
        for (std::size_t p = 0; p < 2; ++p) {
          svidr::TermSpec t;
          t.kind = svidr::TermSpec::Kind::pspline;
          t.covariate = "x";
          spec.params[p].terms.push_back(t);
        }
      } else {
        throw svidr::ConfigError("scenario: must be 'logistic' or 'gamma'");
      }
      svidr::Model model = svidr::build_model(spec, data);

      for (const auto& vname : variants) {
        svidr::FitConfig fc;
        fc.family = svidr::vfamily_from_name(vname);
        fc.epochs = epochs;
        fc.elbo_samples = elbo_samples;
        fc.checkpoint_epochs = checkpoints;
        fc.seed = svidr::derive_seed(rep_seed, std::hash<std::string>{}(vname));
        auto r = svidr::fit(model, fc);

        // RWMH reference at the fitted tau
        svidr::RwmhConfig mc;
        mc.n_draws = ref_draws;
        mc.n_warmup = ref_warmup;
        auto target = svidr::beta_log_target(model, r.tau_hat);
        Vec<double> init = r.posterior.mean;
        init.resize(model.design.Q);
        auto ref = svidr::rwmh_sample(target, init, mc, svidr::derive_seed(rep_seed, 7),
                                      model.design.coef_labels);

        // self-distance baseline: two disjoint halves of the reference chain
        svidr::SampleSet half_a, half_b;
        half_a.labels = half_b.labels = ref.samples.labels;
        const std::size_t half = ref.samples.size() / 2;
        half_a.draws = svidr::Mat<double>(half, model.design.Q);
        half_b.draws = svidr::Mat<double>(half, model.design.Q);
        for (std::size_t k = 0; k < half; ++k)
          for (std::size_t j = 0; j < model.design.Q; ++j) {
            half_a.draws(k, j) = ref.samples.draws(k, j);
            half_b.draws(k, j) = ref.samples.draws(half + k, j);
          }
        if (&vname == &variants.front())
          rows.push_back(
              {rep, "reference_self", 0,
               svidr::wasserstein1_marginals(half_a, half_b, rep_seed).aggregate, ""});

        for (int cp : checkpoints) {
          const auto& snap = r.checkpoints.at(cp);
          svidr::Rng rng(svidr::derive_seed(rep_seed, 100 + cp));
          auto full = svidr::draw_samples(snap.posterior, r.labels, kEvalDraws, rng);
          // classic_joint latents include tau; keep only the beta columns
          svidr::SampleSet draws;
          draws.labels = model.design.coef_labels;
          draws.draws = svidr::Mat<double>(full.size(), model.design.Q);
          for (std::size_t k = 0; k < full.size(); ++k)
            for (std::size_t j = 0; j < model.design.Q; ++j)
              draws.draws(k, j) = full.draws(k, j);
          auto rep_w1 = svidr::wasserstein1_marginals(draws, ref.samples,
                                                      svidr::derive_seed(rep_seed, cp));
          rows.push_back({rep, vname, cp, rep_w1.aggregate, ""});
        }
      }
    } catch (const std::exception& e) {
      rows.push_back({rep, "error", -1, std::nan(""), e.what()});
    }
    return rows;
  };

  // replicates run in parallel on derived seeds; output order is fixed
  const std::size_t n_threads =
      std::min<std::size_t>(get_or<std::size_t>(cfg, "threads",
                                                std::thread::hardware_concurrency()),
                            n_rep);
  std::vector<std::future<std::vector<ReplicateRow>>> futures;
  std::vector<std::vector<ReplicateRow>> results(n_rep);
  std::size_t next = 0;
  while (next < n_rep) {
    const std::size_t batch = std::min(n_threads, n_rep - next);
    futures.clear();
    for (std::size_t k = 0; k < batch; ++k)
      futures.push_back(std::async(std::launch::async, run_one, next + k));
    for (std::size_t k = 0; k < batch; ++k) results[next + k] = futures[k].get();
    next += batch;
  }

  std::vector<std::vector<std::string>> rows;
  for (const auto& rep_rows : results)
    for (const auto& r : rep_rows)
      rows.push_back({std::to_string(r.replicate), r.variant, std::to_string(r.checkpoint),
                      fmt(r.w1), r.error});
  svidr::write_table_csv(out / "replications.csv",
                         {"replicate", "variant", "checkpoint", "w1", "error"}, rows);
  json resolved = cfg;
  resolved["seed"] = seed;
  resolved["epochs"] = epochs;
  write_manifest(out, "replicate", resolved);
  std::cout << "replicate: " << rows.size() << " rows\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"svidr: stochastic variational inference for distributional regression"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed_flag;

  for (const char* name : {"fit", "simulate", "evaluate", "replicate"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--seed", seed_flag, "override the config seed");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    json cfg;
    try {
      cfg = json::parse(svidr::read_file(config_path));
    } catch (const json::exception& e) {
      throw svidr::ConfigError(std::string("config parse: ") + e.what());
    }
    // a run manifest is itself a valid config: unwrap it
    if (cfg.contains("command") && cfg.contains("config") && cfg.size() == 2)
      cfg = cfg.at("config");

    const fs::path out(out_dir);
    fs::create_directories(out);
    const std::string command = app.get_subcommands().front()->get_name();
    if (command == "fit") return cmd_fit(cfg, out, seed_flag);
    if (command == "simulate") return cmd_simulate(cfg, out, seed_flag);
    if (command == "evaluate") return cmd_evaluate(cfg, out, seed_flag);
    return cmd_replicate(cfg, out, seed_flag);
  } catch (const svidr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const svidr::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const svidr::MissingCovariate& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const svidr::SupportViolation& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const svidr::LabelMismatch& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const svidr::DegenerateRange& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const svidr::Error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
}
