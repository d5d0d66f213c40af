#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dgpal/io.hpp"
#include "dgpal/selfcheck.hpp"

namespace py = pybind11;
using namespace dgpal;

namespace {

LatentMode latent_mode_from(const std::string& name) {
  if (name == "mean") return LatentMode::Mean;
  if (name == "sample") return LatentMode::Sample;
  throw DomainError("latent mode must be 'mean' or 'sample'");
}

Criterion criterion_from(const std::string& name) {
  if (name == "alc") return Criterion::Alc;
  if (name == "imse") return Criterion::Imse;
  throw DomainError("criterion must be 'alc' or 'imse'");
}

FittedModel fit_py(const Matrix& x, const Vector& y, int layers, int p,
                   int iters, int burn, int thin, bool deterministic,
                   std::uint64_t seed) {
  ModelConfig cfg;
  cfg.layers = layers;
  cfg.p = p;
  cfg.iters = iters;
  cfg.burn = burn;
  cfg.thin = thin;
  cfg.deterministic = deterministic;
  return fit(cfg, Dataset{x, y}, seed);
}

py::dict history_record(const StepRecord& rec) {
  py::dict out;
  out["step"] = rec.step;
  out["n"] = rec.n;
  if (rec.has_point) {
    out["x"] = rec.x;
    out["y"] = rec.y;
  }
  if (rec.rmse_value) out["rmse"] = *rec.rmse_value;
  if (rec.score_value) out["score"] = *rec.score_value;
  out["seconds"] = rec.seconds;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Deep Gaussian process surrogates with MCMC inference and "
            "active-learning acquisition";

  py::register_exception<NotPositiveDefinite>(m, "NotPositiveDefinite");
  py::register_exception<DegenerateUpdate>(m, "DegenerateUpdate");

  py::class_<FittedModel>(m, "Model")
      .def_property_readonly(
          "layers", [](const FittedModel& f) { return f.config.layers; })
      .def_property_readonly("p",
                             [](const FittedModel& f) { return f.config.p; })
      .def_property_readonly(
          "n", [](const FittedModel& f) { return f.data.n(); })
      .def_property_readonly(
          "d", [](const FittedModel& f) { return f.data.d(); })
      .def_property_readonly(
          "trace_length", [](const FittedModel& f) { return f.trace.size(); })
      .def("trace_theta_y",
           [](const FittedModel& f) {
             Vector out(f.trace.size());
             for (Index t = 0; t < f.trace.size(); ++t) {
               out(t) = f.trace.states[t].theta_y;
             }
             return out;
           })
      .def("trace_g",
           [](const FittedModel& f) {
             Vector out(f.trace.size());
             for (Index t = 0; t < f.trace.size(); ++t) {
               out(t) = f.trace.states[t].g;
             }
             return out;
           })
      .def(
          "predict",
          [](const FittedModel& f, const Matrix& xtest, bool pointwise,
             bool noise_free, const std::string& latent, std::uint64_t seed,
             int threads) -> py::tuple {
            PredictiveMoments pm =
                predict(f, xtest, pointwise, noise_free,
                        latent_mode_from(latent), seed, threads);
            if (pointwise) {
              return py::make_tuple(pm.mean, pm.variance);
            }
            return py::make_tuple(pm.mean, pm.covariance);
          },
          py::arg("xtest"), py::arg("pointwise") = true,
          py::arg("noise_free") = false, py::arg("latent") = "sample",
          py::arg("seed") = 0, py::arg("threads") = 0,
          "Posterior predictive mean and variance (or covariance) at xtest")
      .def(
          "acquire",
          [](const FittedModel& f, const Matrix& xcand,
             const std::string& criterion, std::uint64_t seed, int threads) {
            AcqResult res = evaluate_candidates(
                f, xcand, criterion_from(criterion), seed, threads);
            return py::make_tuple(res.values, res.chosen);
          },
          py::arg("xcand"), py::arg("criterion") = "alc", py::arg("seed") = 0,
          py::arg("threads") = 0,
          "Averaged criterion values and the chosen candidate index")
      .def(
          "save",
          [](const FittedModel& f, const std::string& dir) {
            Matrix user_x = f.data.x;
            Dataset user{user_x, f.data.y};
            save_model(dir, f, ModelTransforms::identity(f.data.d()), user);
          },
          py::arg("dir"));

  m.def("fit", &fit_py, py::arg("x"), py::arg("y"), py::arg("layers") = 2,
        py::arg("p") = 0, py::arg("iters") = 2500, py::arg("burn") = 500,
        py::arg("thin") = 2, py::arg("deterministic") = false,
        py::arg("seed") = 0,
        "Fit a one/two/three-layer model; x coded to [0,1]^d and y "
        "standardized by the caller");

  m.def(
      "load",
      [](const std::string& dir) { return load_model(dir).model; },
      py::arg("dir"), "Load a model directory (internal, coded units)");

  m.def(
      "lhs",
      [](int n, int d, std::uint64_t seed) {
        Rng rng(seed);
        return lhs(n, d, rng);
      },
      py::arg("n"), py::arg("d"), py::arg("seed") = 0,
      "Latin hypercube sample on the unit cube");

  m.def("f_piecewise_1d", py::vectorize(f_piecewise_1d));
  m.def("f_exp_2d", py::vectorize(f_exp_2d));
  m.def("rmse", &rmse, py::arg("pred_mean"), py::arg("truth"));
  m.def("score", &score, py::arg("pred_mean"), py::arg("pred_var"),
        py::arg("truth"));

  m.def(
      "run_campaign",
      [](const std::string& config_path) {
        CampaignConfig cfg = parse_campaign_config(config_path);
        CampaignHistory history = run_campaign(cfg);
        if (history.error) throw std::runtime_error(*history.error);
        py::list records;
        for (const auto& rec : history.records) {
          records.append(history_record(rec));
        }
        return records;
      },
      py::arg("config_path"),
      "Run a sequential-design campaign from a config file; returns the "
      "per-step history records");

  m.def(
      "selfcheck",
      [](std::uint64_t seed) {
        py::list out;
        for (const auto& r : selfcheck::run_all(seed)) {
          py::dict entry;
          entry["name"] = r.name;
          entry["pass"] = r.pass;
          entry["detail"] = r.detail;
          out.append(entry);
        }
        return out;
      },
      py::arg("seed") = 0, "Run the built-in oracle suite");

  m.attr("__version__") = "0.1.0";
}
