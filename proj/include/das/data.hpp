#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "das/types.hpp"

namespace das {

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A tabular dataset: n samples by d features, optional binary labels
/// (0 = normal, 1 = anomaly) and optional feature names.
struct Dataset {
  Matrix features;
  std::optional<IntVector> labels;
  std::optional<std::vector<std::string>> feature_names;

  Eigen::Index rows() const { return features.rows(); }
  Eigen::Index cols() const { return features.cols(); }
};

/// Seeded one-class split: train holds only normals, test holds the leftover
/// normals plus every anomaly.
struct OneClassSplit {
  Dataset train;
  Dataset test;
  std::uint64_t seed = 0;
};

struct StandardizationParams {
  Vector mean;
  Vector std;  // population convention (divide by n); constant features get 0
};

/// CSV loader. Dialect: comma separator, '.' decimal point, mandatory header
/// row, no quoting (cells containing commas are rejected by construction).
/// Label cells must be 0 or 1. Errors name the offending row and column.
Dataset load_csv(const std::string& path,
                 const std::optional<std::string>& label_column = std::nullopt);

/// Writer for the same dialect; load_csv(save_csv(ds)) reproduces the values
/// bitwise (values are printed with round-trip precision).
void save_csv(const Dataset& data, const std::string& path,
              const std::string& label_column = "label");

/// Subsample floor(train_fraction * #normals) normals into train via a seeded
/// Fisher-Yates shuffle; the rest of the normals and all anomalies form test.
OneClassSplit split_one_class(const Dataset& data, double train_fraction,
                              std::uint64_t seed);

StandardizationParams fit_standardizer(const Dataset& train);

/// x -> (x - mean) / std per feature; features with std == 0 map to 0.
Dataset apply_standardizer(const StandardizationParams& params,
                           const Dataset& data);

}  // namespace das
