#include "das/data.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>

#include "das/rng.hpp"

namespace das {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  cells.push_back(cur);
  return cells;
}

double parse_cell(const std::string& cell, std::size_t row,
                  const std::string& column) {
  const char* begin = cell.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || errno == ERANGE || !std::isfinite(v)) {
    throw DataError("non-numeric cell \"" + cell + "\" at row " +
                    std::to_string(row) + ", column \"" + column + "\"");
  }
  return v;
}

}  // namespace

Dataset load_csv(const std::string& path,
                 const std::optional<std::string>& label_column) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw DataError("empty file: " + path);
  const std::vector<std::string> header = split_line(line);

  std::ptrdiff_t label_idx = -1;
  if (label_column) {
    auto it = std::find(header.begin(), header.end(), *label_column);
    if (it == header.end()) {
      throw DataError("label column \"" + *label_column + "\" not in header");
    }
    label_idx = it - header.begin();
  }

  std::vector<std::string> names;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (static_cast<std::ptrdiff_t>(j) != label_idx) names.push_back(header[j]);
  }
  const std::size_t d = names.size();
  if (d == 0) throw DataError("no feature columns in " + path);

  std::vector<double> values;
  std::vector<int> labels;
  std::size_t n = 0;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size()) {
      throw DataError("row " + std::to_string(row) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(header.size()));
    }
    for (std::size_t j = 0; j < cells.size(); ++j) {
      if (static_cast<std::ptrdiff_t>(j) == label_idx) {
        const double v = parse_cell(cells[j], row, header[j]);
        if (v != 0.0 && v != 1.0) {
          throw DataError("label value " + cells[j] + " at row " +
                          std::to_string(row) + " not in {0,1}");
        }
        labels.push_back(static_cast<int>(v));
      } else {
        values.push_back(parse_cell(cells[j], row, header[j]));
      }
    }
    ++n;
  }
  if (n == 0) throw DataError("no data rows in " + path);

  Dataset ds;
  ds.features = Eigen::Map<const Matrix>(values.data(),
                                         static_cast<Eigen::Index>(n),
                                         static_cast<Eigen::Index>(d));
  if (label_idx >= 0) {
    ds.labels = Eigen::Map<const IntVector>(labels.data(),
                                            static_cast<Eigen::Index>(n));
  }
  ds.feature_names = names;
  return ds;
}

void save_csv(const Dataset& data, const std::string& path,
              const std::string& label_column) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);

  const Eigen::Index d = data.cols();
  for (Eigen::Index j = 0; j < d; ++j) {
    if (j) out << ',';
    if (data.feature_names && static_cast<std::size_t>(j) < data.feature_names->size()) {
      out << (*data.feature_names)[static_cast<std::size_t>(j)];
    } else {
      out << 'f' << j;
    }
  }
  if (data.labels) out << ',' << label_column;
  out << '\n';

  char buf[64];
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      if (j) out << ',';
      std::snprintf(buf, sizeof buf, "%.17g", data.features(i, j));
      out << buf;
    }
    if (data.labels) out << ',' << (*data.labels)(i);
    out << '\n';
  }
}

OneClassSplit split_one_class(const Dataset& data, double train_fraction,
                              std::uint64_t seed) {
  if (!data.labels) throw DataError("split_one_class requires labels");
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) {
    throw DataError("train_fraction must be in (0,1]");
  }
  std::vector<Eigen::Index> normals, anomalies;
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    ((*data.labels)(i) == 0 ? normals : anomalies).push_back(i);
  }
  if (anomalies.empty()) throw DataError("no anomalies present");
  if (normals.size() < 2) throw DataError("fewer than 2 normal samples");

  const std::size_t n_train = static_cast<std::size_t>(
      std::floor(train_fraction * static_cast<double>(normals.size())));
  if (n_train == 0) throw DataError("train split would be empty");

  Rng rng(seed);
  rng.shuffle(normals);

  std::vector<Eigen::Index> train_idx(normals.begin(),
                                      normals.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<Eigen::Index> test_idx(normals.begin() + static_cast<std::ptrdiff_t>(n_train),
                                     normals.end());
  test_idx.insert(test_idx.end(), anomalies.begin(), anomalies.end());

  auto take = [&](const std::vector<Eigen::Index>& idx) {
    Dataset out;
    out.features.resize(static_cast<Eigen::Index>(idx.size()), data.cols());
    IntVector lab(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      out.features.row(static_cast<Eigen::Index>(i)) = data.features.row(idx[i]);
      lab(static_cast<Eigen::Index>(i)) = (*data.labels)(idx[i]);
    }
    out.labels = lab;
    out.feature_names = data.feature_names;
    return out;
  };

  OneClassSplit split;
  split.train = take(train_idx);
  split.test = take(test_idx);
  split.seed = seed;
  return split;
}

StandardizationParams fit_standardizer(const Dataset& train) {
  if (train.rows() == 0) throw DataError("empty training set");
  StandardizationParams p;
  p.mean = train.features.colwise().mean();
  const Matrix centered = train.features.rowwise() - p.mean.transpose();
  p.std = (centered.array().square().colwise().mean()).sqrt();
  return p;
}

Dataset apply_standardizer(const StandardizationParams& params,
                           const Dataset& data) {
  if (params.mean.size() != data.cols()) {
    throw DataError("standardizer dimension mismatch");
  }
  Dataset out = data;
  for (Eigen::Index j = 0; j < data.cols(); ++j) {
    if (params.std(j) > 0.0) {
      out.features.col(j) =
          (data.features.col(j).array() - params.mean(j)) / params.std(j);
    } else {
      out.features.col(j).setZero();
    }
  }
  return out;
}

}  // namespace das
