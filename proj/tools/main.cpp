#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "dgpal/io.hpp"
#include "dgpal/selfcheck.hpp"

namespace {

using namespace dgpal;

constexpr double kZ90 = 1.6448536269514722;  // standard normal 95% quantile

struct CommonOpts {
  std::uint64_t seed = 0;
  int threads = 0;
};

std::vector<std::string> x_header(Index d, const std::string& extra = "") {
  std::vector<std::string> header;
  for (Index j = 1; j <= d; ++j) header.push_back("x_" + std::to_string(j));
  if (!extra.empty()) header.push_back(extra);
  return header;
}

Matrix read_design(const std::string& path, Index d) {
  CsvTable table = read_csv(path);
  if (table.values.cols() == d + 1) {
    return table.values.leftCols(d);  // response column present; ignore it
  }
  if (table.values.cols() != d) {
    throw DimensionMismatch("input file " + path + " has " +
                            std::to_string(table.values.cols()) +
                            " columns, model expects " + std::to_string(d));
  }
  return table.values;
}

int cmd_fit(const std::string& in, const std::string& out,
            const ModelConfig& mc, bool raw, const CommonOpts& opts) {
  Dataset user = split_xy(read_csv(in));
  ModelTransforms transforms = raw ? ModelTransforms::identity(user.d())
                                   : ModelTransforms::from_data(user.x, user.y);
  Dataset internal{transforms.code(user.x), transforms.standardize(user.y)};
  FittedModel model = fit(mc, std::move(internal), opts.seed);
  save_model(out, model, transforms, user);

  double tau2_mean = 0.0;
  for (const auto& s : model.trace.states) tau2_mean += s.tau2hat;
  tau2_mean /= model.trace.size();
  std::printf("fit: layers=%d p=%d n=%lld trace=%lld tau2hat_mean=%.6g",
              model.config.layers, model.config.p,
              static_cast<long long>(model.data.n()),
              static_cast<long long>(model.trace.size()), tau2_mean);
  std::printf(" accept_g=%.3f accept_theta_y=%.3f",
              model.trace.meta.g.rate(), model.trace.meta.theta_y.rate());
  for (size_t i = 0; i < model.trace.meta.theta_w.size(); ++i) {
    std::printf(" accept_theta_w%zu=%.3f", i + 1,
                model.trace.meta.theta_w[i].rate());
  }
  for (size_t i = 0; i < model.trace.meta.theta_z.size(); ++i) {
    std::printf(" accept_theta_z%zu=%.3f", i + 1,
                model.trace.meta.theta_z[i].rate());
  }
  std::printf("\n");
  return 0;
}

int cmd_predict(const std::string& model_dir, const std::string& in,
                const std::string& out, bool noise_free,
                const std::string& latent, const CommonOpts& opts) {
  LoadedModel loaded = load_model(model_dir);
  Matrix xtest = read_design(in, loaded.model.data.d());
  const LatentMode mode =
      latent == "mean" ? LatentMode::Mean : LatentMode::Sample;
  PredictiveMoments pm = predict(loaded.model, loaded.transforms.code(xtest),
                                 true, noise_free, mode, opts.seed,
                                 opts.threads);
  Vector mean = loaded.transforms.mean_to_natural(pm.mean);
  Vector var = loaded.transforms.var_to_natural(pm.variance);

  Matrix table(mean.size(), 4);
  for (Index i = 0; i < mean.size(); ++i) {
    const double half = kZ90 * std::sqrt(std::max(0.0, var(i)));
    table(i, 0) = mean(i);
    table(i, 1) = var(i);
    table(i, 2) = mean(i) - half;
    table(i, 3) = mean(i) + half;
  }
  write_csv(out, {"mean", "variance", "q05", "q95"}, table);
  std::printf("predict: %lld points -> %s\n",
              static_cast<long long>(mean.size()), out.c_str());
  return 0;
}

int cmd_acquire(const std::string& model_dir, const std::string& in,
                const std::string& out, const std::string& chosen_path,
                const std::string& criterion, const CommonOpts& opts) {
  LoadedModel loaded = load_model(model_dir);
  Matrix cand = read_design(in, loaded.model.data.d());
  const Criterion crit =
      criterion == "imse" ? Criterion::Imse : Criterion::Alc;
  AcqResult res = evaluate_candidates(loaded.model,
                                      loaded.transforms.code(cand), crit,
                                      opts.seed, opts.threads);

  Matrix surface(cand.rows(), cand.cols() + 1);
  surface.leftCols(cand.cols()) = cand;
  surface.rightCols(1) = res.values;
  write_csv(out, x_header(cand.cols(), criterion), surface);

  Matrix chosen_row = surface.row(res.chosen);
  write_csv(chosen_path, x_header(cand.cols(), criterion), chosen_row);
  std::printf("acquire: criterion=%s chosen=%lld value=%.6g\n",
              criterion.c_str(), static_cast<long long>(res.chosen),
              res.values(res.chosen));
  return 0;
}

struct CampaignOverrides {
  bool has_seed = false, has_threads = false, has_criterion = false;
  bool has_layers = false, has_p = false, has_deterministic = false;
  bool has_iters = false, has_burn = false, has_thin = false;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string criterion;
  int layers = 2, p = 0, iters = 2500, burn = 500, thin = 2;
  bool deterministic = false;
};

int cmd_campaign(const std::string& config_path, const std::string& out,
                 const CampaignOverrides& ov) {
  CampaignConfig cfg = parse_campaign_config(config_path);
  if (ov.has_seed) cfg.seed = ov.seed;
  if (ov.has_threads) cfg.threads = ov.threads;
  if (ov.has_criterion) {
    cfg.criterion = ov.criterion == "imse" ? Criterion::Imse : Criterion::Alc;
  }
  if (ov.has_layers) cfg.model.layers = ov.layers;
  if (ov.has_p) cfg.model.p = ov.p;
  if (ov.has_deterministic) cfg.model.deterministic = ov.deterministic;
  if (ov.has_iters) cfg.model.iters = ov.iters;
  if (ov.has_burn) cfg.model.burn = ov.burn;
  if (ov.has_thin) cfg.model.thin = ov.thin;
  cfg.validate();

  CampaignHistory history = run_campaign(cfg);
  write_history(out, history, cfg.blackbox.dim(), cfg.timing);
  if (history.error) {
    std::fprintf(stderr, "campaign aborted: %s (partial history in %s)\n",
                 history.error->c_str(), out.c_str());
    return 1;
  }
  const auto& last = history.records.back();
  std::printf("campaign: n=%d steps=%zu", last.n, history.records.size() - 1);
  if (last.rmse_value) std::printf(" rmse=%.6g", *last.rmse_value);
  if (last.score_value) std::printf(" score=%.6g", *last.score_value);
  std::printf(" -> %s\n", out.c_str());
  return 0;
}

int cmd_selfcheck(std::uint64_t seed, double perturb) {
  auto results = selfcheck::run_all(seed, perturb);
  bool all_pass = true;
  for (const auto& r : results) {
    std::printf("%-24s %s  %s\n", r.name.c_str(), r.pass ? "PASS" : "FAIL",
                r.detail.c_str());
    all_pass = all_pass && r.pass;
  }
  return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deep Gaussian process surrogates with active learning"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string in, out, model_dir, config_path;
  std::string criterion = "alc";
  std::string latent = "sample";
  std::string chosen_path;
  bool raw = false;
  bool noise_free = false;
  double perturb = 0.0;
  ModelConfig mc;
  CampaignOverrides ov;

  auto* fit_cmd = app.add_subcommand("fit", "fit a model to a training file");
  fit_cmd->add_option("--in", in, "training csv (x_1..x_d, y)")->required();
  fit_cmd->add_option("--out", out, "model output directory")->required();
  fit_cmd->add_option("--layers", mc.layers, "1, 2, or 3");
  fit_cmd->add_option("--p", mc.p, "latent nodes per hidden layer (0 = d)");
  fit_cmd->add_flag("--deterministic", mc.deterministic,
                    "interpolate: pin the nugget at its floor");
  fit_cmd->add_option("--iters", mc.iters, "MCMC iterations");
  fit_cmd->add_option("--burn", mc.burn, "burn-in iterations");
  fit_cmd->add_option("--thin", mc.thin, "thinning stride");
  fit_cmd->add_flag("--raw", raw,
                    "skip input coding / response standardization");
  fit_cmd->add_option("--seed", opts.seed, "RNG seed");

  auto* predict_cmd = app.add_subcommand("predict", "predict at test points");
  predict_cmd->add_option("--model", model_dir, "model directory")->required();
  predict_cmd->add_option("--in", in, "test csv")->required();
  predict_cmd->add_option("--out", out, "predictions csv")->required();
  predict_cmd->add_flag("--noise-free", noise_free,
                        "predict the latent mean (drop test-point noise)");
  predict_cmd->add_option("--latent", latent, "latent mode: mean or sample")
      ->check(CLI::IsMember({"mean", "sample"}));
  predict_cmd->add_option("--seed", opts.seed, "RNG seed");
  predict_cmd->add_option("--threads", opts.threads, "worker cap (0 = auto)");

  auto* acquire_cmd =
      app.add_subcommand("acquire", "score candidates and pick the next run");
  acquire_cmd->add_option("--model", model_dir, "model directory")->required();
  acquire_cmd->add_option("--in", in, "candidate csv")->required();
  acquire_cmd->add_option("--out", out, "criterion surface csv")->required();
  acquire_cmd->add_option("--chosen", chosen_path,
                          "chosen-point csv (default <out>.chosen.csv)");
  acquire_cmd->add_option("--criterion", criterion, "alc or imse")
      ->check(CLI::IsMember({"alc", "imse"}));
  acquire_cmd->add_option("--seed", opts.seed, "RNG seed");
  acquire_cmd->add_option("--threads", opts.threads, "worker cap (0 = auto)");

  auto* campaign_cmd =
      app.add_subcommand("campaign", "run a sequential design campaign");
  campaign_cmd->add_option("--config", config_path, "campaign config file")
      ->required();
  campaign_cmd->add_option("--out", out, "history csv")->required();
  auto* seed_opt = campaign_cmd->add_option("--seed", ov.seed, "RNG seed");
  auto* threads_opt =
      campaign_cmd->add_option("--threads", ov.threads, "worker cap");
  auto* crit_opt = campaign_cmd->add_option("--criterion", ov.criterion)
                       ->check(CLI::IsMember({"alc", "imse"}));
  auto* layers_opt = campaign_cmd->add_option("--layers", ov.layers);
  auto* p_opt = campaign_cmd->add_option("--p", ov.p);
  auto* det_opt =
      campaign_cmd->add_flag("--deterministic", ov.deterministic);
  auto* iters_opt = campaign_cmd->add_option("--iters", ov.iters);
  auto* burn_opt = campaign_cmd->add_option("--burn", ov.burn);
  auto* thin_opt = campaign_cmd->add_option("--thin", ov.thin);

  auto* selfcheck_cmd =
      app.add_subcommand("selfcheck", "run the built-in oracle suite");
  selfcheck_cmd->add_option("--seed", opts.seed, "RNG seed");
  selfcheck_cmd->add_option("--perturb", perturb,
                            "inject an error (testing hook)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*fit_cmd) return cmd_fit(in, out, mc, raw, opts);
    if (*predict_cmd) {
      return cmd_predict(model_dir, in, out, noise_free, latent, opts);
    }
    if (*acquire_cmd) {
      if (chosen_path.empty()) chosen_path = out + ".chosen.csv";
      return cmd_acquire(model_dir, in, out, chosen_path, criterion, opts);
    }
    if (*campaign_cmd) {
      ov.has_seed = seed_opt->count() > 0;
      ov.has_threads = threads_opt->count() > 0;
      ov.has_criterion = crit_opt->count() > 0;
      ov.has_layers = layers_opt->count() > 0;
      ov.has_p = p_opt->count() > 0;
      ov.has_deterministic = det_opt->count() > 0;
      ov.has_iters = iters_opt->count() > 0;
      ov.has_burn = burn_opt->count() > 0;
      ov.has_thin = thin_opt->count() > 0;
      return cmd_campaign(config_path, out, ov);
    }
    if (*selfcheck_cmd) return cmd_selfcheck(opts.seed, perturb);
  } catch (const dgpal::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
