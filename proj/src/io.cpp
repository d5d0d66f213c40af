#include "dgpal/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace dgpal {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, sep)) out.push_back(field);
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);
  return in;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty file: " + path);
  CsvTable table;
  table.header = split(line, ',');
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split(line, ',');
    if (fields.size() != table.header.size()) {
      throw std::runtime_error("ragged row in " + path);
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(std::stod(f));
    rows.push_back(std::move(row));
  }
  table.values.resize(static_cast<Index>(rows.size()),
                      static_cast<Index>(table.header.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t j = 0; j < rows[i].size(); ++j) {
      table.values(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    }
  }
  return table;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Matrix& values) {
  std::ofstream out = open_out(path);
  for (size_t j = 0; j < header.size(); ++j) {
    out << (j ? "," : "") << header[j];
  }
  out << "\n";
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index j = 0; j < values.cols(); ++j) {
      out << (j ? "," : "") << fmt(values(i, j));
    }
    out << "\n";
  }
}

Dataset split_xy(const CsvTable& table) {
  if (table.values.cols() < 2) {
    throw ConfigError("expected at least one input column and a response");
  }
  Dataset data;
  data.x = table.values.leftCols(table.values.cols() - 1);
  data.y = table.values.rightCols(1);
  return data;
}

// ---------------------------------------------------------------------------
// Trace serialization

void write_trace(const std::string& path, const Trace& trace,
                 const ModelConfig& config, Index n) {
  std::ofstream out = open_out(path);
  const int p = config.layers >= 2 ? config.p : 0;
  const bool three = config.layers == 3;

  out << "iteration,g,theta_y";
  for (int i = 1; i <= p; ++i) out << ",theta_w_" << i;
  if (three) {
    for (int i = 1; i <= p; ++i) out << ",theta_z_" << i;
  }
  out << ",tau2hat";
  for (int c = 1; c <= p; ++c) {
    for (Index r = 1; r <= n; ++r) out << ",w_" << r << "_" << c;
  }
  if (three) {
    for (int c = 1; c <= p; ++c) {
      for (Index r = 1; r <= n; ++r) out << ",z_" << r << "_" << c;
    }
  }
  out << "\n";

  for (Index t = 0; t < trace.size(); ++t) {
    const ChainState& s = trace.states[t];
    out << trace.iteration[t] << "," << fmt(s.g) << "," << fmt(s.theta_y);
    for (int i = 0; i < p; ++i) out << "," << fmt(s.theta_w(i));
    if (three) {
      for (int i = 0; i < p; ++i) out << "," << fmt(s.theta_z(i));
    }
    out << "," << fmt(s.tau2hat);
    for (int c = 0; c < p; ++c) {
      for (Index r = 0; r < n; ++r) out << "," << fmt(s.w(r, c));
    }
    if (three) {
      for (int c = 0; c < p; ++c) {
        for (Index r = 0; r < n; ++r) out << "," << fmt(s.z(r, c));
      }
    }
    out << "\n";
  }
}

Trace read_trace(const std::string& path, const ModelConfig& config, Index n) {
  CsvTable table = read_csv(path);
  const int p = config.layers >= 2 ? config.p : 0;
  const bool three = config.layers == 3;
  const Index expected = 4 + p + (three ? p : 0) + n * p + (three ? n * p : 0);
  if (table.values.cols() != expected) {
    throw ConfigError("trace file does not match model layout: " + path);
  }
  Trace trace;
  for (Index t = 0; t < table.values.rows(); ++t) {
    const auto row = table.values.row(t);
    Index c = 0;
    trace.iteration.push_back(static_cast<int>(row(c++)));
    ChainState s;
    s.g = row(c++);
    s.theta_y = row(c++);
    s.theta_w.resize(p);
    for (int i = 0; i < p; ++i) s.theta_w(i) = row(c++);
    if (three) {
      s.theta_z.resize(p);
      for (int i = 0; i < p; ++i) s.theta_z(i) = row(c++);
    }
    s.tau2hat = row(c++);
    if (p > 0) {
      s.w.resize(n, p);
      for (int col = 0; col < p; ++col) {
        for (Index r = 0; r < n; ++r) s.w(r, col) = row(c++);
      }
      if (three) {
        s.z.resize(n, p);
        for (int col = 0; col < p; ++col) {
          for (Index r = 0; r < n; ++r) s.z(r, col) = row(c++);
        }
      }
    }
    trace.states.push_back(std::move(s));
  }
  trace.meta.iters = static_cast<int>(trace.states.size());
  return trace;
}

// ---------------------------------------------------------------------------
// Transforms

Matrix ModelTransforms::code(const Matrix& x_natural) const {
  Matrix coded = x_natural;
  for (Index j = 0; j < coded.cols(); ++j) {
    const double span = x_hi(j) - x_lo(j);
    if (span > 0.0) {
      coded.col(j) = (coded.col(j).array() - x_lo(j)) / span;
    }
  }
  return coded;
}

Vector ModelTransforms::standardize(const Vector& y_natural) const {
  return ((y_natural.array() - y_mean) / y_sd).matrix();
}

Vector ModelTransforms::mean_to_natural(const Vector& mean_std) const {
  return (mean_std.array() * y_sd + y_mean).matrix();
}

Vector ModelTransforms::var_to_natural(const Vector& var_std) const {
  return var_std * (y_sd * y_sd);
}

ModelTransforms ModelTransforms::identity(Index d) {
  ModelTransforms t;
  t.x_lo = Vector::Zero(d);
  t.x_hi = Vector::Ones(d);
  return t;
}

ModelTransforms ModelTransforms::from_data(const Matrix& x, const Vector& y) {
  ModelTransforms t;
  t.x_lo = x.colwise().minCoeff().transpose();
  t.x_hi = x.colwise().maxCoeff().transpose();
  for (Index j = 0; j < x.cols(); ++j) {
    if (!(t.x_hi(j) > t.x_lo(j))) {   // constant column: leave it alone
      t.x_lo(j) = 0.0;
      t.x_hi(j) = 1.0;
    }
  }
  t.y_mean = y.mean();
  const double ss = (y.array() - t.y_mean).square().sum();
  t.y_sd = y.size() > 1 ? std::sqrt(ss / (y.size() - 1)) : 1.0;
  if (!(t.y_sd > 0.0)) t.y_sd = 1.0;
  return t;
}

// ---------------------------------------------------------------------------
// Model directory

void save_model(const std::string& dir, const FittedModel& model,
                const ModelTransforms& transforms, const Dataset& user_data) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  nlohmann::json manifest;
  manifest["format"] = "dgpal-model-v1";
  manifest["layers"] = model.config.layers;
  manifest["p"] = model.config.p;
  manifest["deterministic"] = model.config.deterministic;
  manifest["iters"] = model.config.iters;
  manifest["burn"] = model.config.burn;
  manifest["thin"] = model.config.thin;
  manifest["seed"] = model.trace.meta.seed;
  manifest["proposal"] = {{"l", model.config.proposal.l},
                          {"u", model.config.proposal.u}};
  manifest["priors"] = {{"g", model.config.prior_g.rate},
                        {"theta_y", model.config.prior_theta_y.rate},
                        {"theta_w", model.config.prior_theta_w.rate},
                        {"theta_z", model.config.prior_theta_z.rate}};
  manifest["n"] = model.data.n();
  manifest["d"] = model.data.d();
  manifest["transform"] = {
      {"x_lo", std::vector<double>(transforms.x_lo.begin(), transforms.x_lo.end())},
      {"x_hi", std::vector<double>(transforms.x_hi.begin(), transforms.x_hi.end())},
      {"y_mean", transforms.y_mean},
      {"y_sd", transforms.y_sd}};

  double tau2_mean = 0.0;
  for (const auto& s : model.trace.states) tau2_mean += s.tau2hat;
  if (model.trace.size() > 0) tau2_mean /= model.trace.size();
  nlohmann::json summary;
  summary["trace_length"] = model.trace.size();
  summary["tau2hat_mean"] = tau2_mean;
  summary["accept_g"] = model.trace.meta.g.rate();
  summary["accept_theta_y"] = model.trace.meta.theta_y.rate();
  std::vector<double> aw, az;
  for (const auto& c : model.trace.meta.theta_w) aw.push_back(c.rate());
  for (const auto& c : model.trace.meta.theta_z) az.push_back(c.rate());
  summary["accept_theta_w"] = aw;
  summary["accept_theta_z"] = az;
  manifest["summary"] = std::move(summary);

  std::ofstream mout = open_out(dir + "/manifest.json");
  mout << manifest.dump(2) << "\n";

  std::vector<std::string> header;
  for (Index j = 1; j <= user_data.d(); ++j) {
    header.push_back("x_" + std::to_string(j));
  }
  header.push_back("y");
  Matrix table(user_data.n(), user_data.d() + 1);
  table.leftCols(user_data.d()) = user_data.x;
  table.rightCols(1) = user_data.y;
  write_csv(dir + "/data.csv", header, table);

  write_trace(dir + "/trace.csv", model.trace, model.config, model.data.n());
}

LoadedModel load_model(const std::string& dir) {
  std::ifstream min = open_in(dir + "/manifest.json");
  nlohmann::json manifest = nlohmann::json::parse(min);
  if (manifest.value("format", "") != "dgpal-model-v1") {
    throw ConfigError("unrecognized model manifest: " + dir);
  }

  LoadedModel loaded;
  ModelConfig cfg;
  cfg.layers = manifest.at("layers").get<int>();
  cfg.p = manifest.at("p").get<int>();
  cfg.deterministic = manifest.at("deterministic").get<bool>();
  cfg.iters = manifest.at("iters").get<int>();
  cfg.burn = manifest.at("burn").get<int>();
  cfg.thin = manifest.at("thin").get<int>();
  cfg.proposal.l = manifest.at("proposal").at("l").get<double>();
  cfg.proposal.u = manifest.at("proposal").at("u").get<double>();
  cfg.prior_g.rate = manifest.at("priors").at("g").get<double>();
  cfg.prior_theta_y.rate = manifest.at("priors").at("theta_y").get<double>();
  cfg.prior_theta_w.rate = manifest.at("priors").at("theta_w").get<double>();
  cfg.prior_theta_z.rate = manifest.at("priors").at("theta_z").get<double>();

  const auto& tr = manifest.at("transform");
  auto lo = tr.at("x_lo").get<std::vector<double>>();
  auto hi = tr.at("x_hi").get<std::vector<double>>();
  loaded.transforms.x_lo = Eigen::Map<Vector>(lo.data(), lo.size());
  loaded.transforms.x_hi = Eigen::Map<Vector>(hi.data(), hi.size());
  loaded.transforms.y_mean = tr.at("y_mean").get<double>();
  loaded.transforms.y_sd = tr.at("y_sd").get<double>();

  Dataset user_data = split_xy(read_csv(dir + "/data.csv"));
  loaded.model.config = cfg;
  loaded.model.data.x = loaded.transforms.code(user_data.x);
  loaded.model.data.y = loaded.transforms.standardize(user_data.y);
  loaded.model.trace =
      read_trace(dir + "/trace.csv", cfg, loaded.model.data.n());
  if (loaded.model.trace.size() == 0) {
    throw EmptyTrace("model trace is empty: " + dir);
  }
  loaded.model.final_state = loaded.model.trace.states.back();
  loaded.model.trace.meta.seed = manifest.value("seed", 0ull);
  return loaded;
}

// ---------------------------------------------------------------------------
// Campaign config

CampaignConfig parse_campaign_config(const std::string& path) {
  std::ifstream in = open_in(path);
  CampaignConfig cfg;
  std::string bb_kind = "builtin-1d";
  double noise_sd = 0.1;
  bool noise_set = false;
  std::string external_cmd;
  std::vector<double> domain;
  std::string test_file;

  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::stringstream ss(line);
    std::string key;
    if (!(ss >> key)) continue;
    std::string rest;
    std::getline(ss, rest);
    // Allow `key = value` as well as `key value`.
    size_t start = rest.find_first_not_of(" \t=");
    rest = start == std::string::npos ? "" : rest.substr(start);
    size_t end = rest.find_last_not_of(" \t\r");
    rest = end == std::string::npos ? "" : rest.substr(0, end + 1);
    if (rest.empty()) {
      throw ConfigError("config key '" + key + "' has no value (line " +
                        std::to_string(lineno) + ")");
    }

    auto as_int = [&](const std::string& v) { return std::stoi(v); };
    auto as_double = [&](const std::string& v) { return std::stod(v); };
    auto as_bool = [&](const std::string& v) {
      if (v == "true" || v == "on" || v == "1") return true;
      if (v == "false" || v == "off" || v == "0") return false;
      throw ConfigError("config key '" + key + "' expects a boolean");
    };

    try {
      if (key == "blackbox") {
        bb_kind = rest;
      } else if (key == "noise_sd") {
        noise_sd = as_double(rest);
        noise_set = true;
      } else if (key == "external_cmd") {
        external_cmd = rest;
      } else if (key == "domain") {
        std::stringstream ds(rest);
        double v;
        domain.clear();
        while (ds >> v) domain.push_back(v);
      } else if (key == "n0") {
        cfg.n0 = as_int(rest);
      } else if (key == "n_final") {
        cfg.n_final = as_int(rest);
      } else if (key == "n_cand") {
        cfg.n_cand = as_int(rest);
      } else if (key == "criterion") {
        if (rest == "alc") {
          cfg.criterion = Criterion::Alc;
        } else if (rest == "imse") {
          cfg.criterion = Criterion::Imse;
        } else {
          throw ConfigError("criterion must be alc or imse");
        }
      } else if (key == "layers") {
        cfg.model.layers = as_int(rest);
      } else if (key == "p") {
        cfg.model.p = as_int(rest);
      } else if (key == "deterministic") {
        cfg.model.deterministic = as_bool(rest);
      } else if (key == "iters") {
        cfg.model.iters = as_int(rest);
      } else if (key == "burn") {
        cfg.model.burn = as_int(rest);
      } else if (key == "thin") {
        cfg.model.thin = as_int(rest);
      } else if (key == "first_iters") {
        cfg.first_iters = as_int(rest);
      } else if (key == "first_burn") {
        cfg.first_burn = as_int(rest);
      } else if (key == "first_thin") {
        cfg.first_thin = as_int(rest);
      } else if (key == "eval_every") {
        cfg.eval_every = as_int(rest);
      } else if (key == "test_n") {
        cfg.test_n = as_int(rest);
      } else if (key == "test_file") {
        test_file = rest;
      } else if (key == "latent_mode") {
        if (rest == "mean") {
          cfg.latent_mode = LatentMode::Mean;
        } else if (rest == "sample") {
          cfg.latent_mode = LatentMode::Sample;
        } else {
          throw ConfigError("latent_mode must be mean or sample");
        }
      } else if (key == "score") {
        if (rest == "full") {
          cfg.score_full_cov = true;
        } else if (rest == "pointwise") {
          cfg.score_full_cov = false;
        } else {
          throw ConfigError("score must be pointwise or full");
        }
      } else if (key == "seed") {
        cfg.seed = std::stoull(rest);
      } else if (key == "threads") {
        cfg.threads = as_int(rest);
      } else if (key == "timing") {
        cfg.timing = as_bool(rest);
      } else {
        throw ConfigError("unknown config key '" + key + "' (line " +
                          std::to_string(lineno) + ")");
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw ConfigError("bad value for config key '" + key + "' (line " +
                        std::to_string(lineno) + ")");
    }
  }

  if (bb_kind == "builtin-1d") {
    cfg.blackbox = make_builtin_1d(noise_set ? noise_sd : 0.1);
  } else if (bb_kind == "builtin-2d") {
    cfg.blackbox = make_builtin_2d(noise_set ? noise_sd : 0.1);
  } else if (bb_kind == "external") {
    if (external_cmd.empty()) {
      throw ConfigError("external blackbox requires key 'external_cmd'");
    }
    if (domain.empty() || domain.size() % 2 != 0) {
      throw ConfigError("external blackbox requires key 'domain' lo hi pairs");
    }
    Matrix dom(domain.size() / 2, 2);
    for (size_t i = 0; i < domain.size() / 2; ++i) {
      dom(static_cast<Index>(i), 0) = domain[2 * i];
      dom(static_cast<Index>(i), 1) = domain[2 * i + 1];
    }
    cfg.blackbox = make_external(external_cmd, dom, noise_set ? noise_sd : 0.0);
  } else {
    throw ConfigError("blackbox must be builtin-1d, builtin-2d, or external");
  }

  if (!test_file.empty()) {
    cfg.test_set = split_xy(read_csv(test_file));
  }
  return cfg;
}

void write_history(const std::string& path, const CampaignHistory& history,
                   Index d, bool timing) {
  std::ofstream out = open_out(path);
  out << "step,n";
  for (Index j = 1; j <= d; ++j) out << ",x_" << j;
  out << ",y,rmse,score,seconds\n";
  for (const auto& rec : history.records) {
    out << rec.step << "," << rec.n;
    for (Index j = 0; j < d; ++j) {
      out << ",";
      if (rec.has_point) out << fmt(rec.x(j));
    }
    out << ",";
    if (rec.has_point) out << fmt(rec.y);
    out << ",";
    if (rec.rmse_value) out << fmt(*rec.rmse_value);
    out << ",";
    if (rec.score_value) out << fmt(*rec.score_value);
    out << ",";
    if (timing) out << fmt(rec.seconds);
    out << "\n";
  }
}

}  // namespace dgpal
