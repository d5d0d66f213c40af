#pragma once

#include <string>
#include <vector>

#include "dgpal/campaign.hpp"

namespace dgpal {

struct CsvTable {
  std::vector<std::string> header;
  Matrix values;
};

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Matrix& values);

/// Split a table with the response in the last column into (X, y).
Dataset split_xy(const CsvTable& table);

/// Columnar trace file: one state per row with columns
/// iteration, g, theta_y, theta_w_1..p, theta_z_1..p, tau2hat, then W and Z
/// flattened column-major, under a documented header row.
void write_trace(const std::string& path, const Trace& trace,
                 const ModelConfig& config, Index n);
Trace read_trace(const std::string& path, const ModelConfig& config, Index n);

/// Affine maps between user units and the model's internal coded inputs /
/// standardized response.  Identity when fitting raw data.
struct ModelTransforms {
  Vector x_lo;
  Vector x_hi;
  double y_mean = 0.0;
  double y_sd = 1.0;

  Matrix code(const Matrix& x_natural) const;
  Vector standardize(const Vector& y_natural) const;
  Vector mean_to_natural(const Vector& mean_std) const;
  Vector var_to_natural(const Vector& var_std) const;

  static ModelTransforms identity(Index d);
  static ModelTransforms from_data(const Matrix& x, const Vector& y);
};

/// Model directory layout: manifest.json + data.csv (user units) +
/// trace.csv (internal units).
void save_model(const std::string& dir, const FittedModel& model,
                const ModelTransforms& transforms, const Dataset& user_data);

struct LoadedModel {
  FittedModel model;
  ModelTransforms transforms;
};
LoadedModel load_model(const std::string& dir);

/// Flat key/value campaign configuration (one `key value` pair per line,
/// '#' comments).  Unknown keys raise ConfigError naming the key.
CampaignConfig parse_campaign_config(const std::string& path);

void write_history(const std::string& path, const CampaignHistory& history,
                   Index d, bool timing);

}  // namespace dgpal
