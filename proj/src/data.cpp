#include "tkrr/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tkrr/errors.hpp"
#include "tkrr/rng.hpp"

namespace tkrr {

namespace {

// One record of an RFC-4180 stream. Quoted fields may contain commas,
// escaped quotes ("") and newlines; records end at an unquoted newline.
// Returns false at end of input with no pending record.
bool read_record(std::istream& in, std::vector<std::string>& fields, long& line_no) {
  fields.clear();
  std::string field;
  bool in_quotes = false;
  bool any = false;
  int c;
  while ((c = in.get()) != EOF) {
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          field.push_back('"');
          in.get();
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line_no;
        field.push_back(static_cast<char>(c));
      }
    } else if (c == '"' && field.empty()) {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get();
      ++line_no;
      fields.push_back(std::move(field));
      return true;
    } else if (c == '\n') {
      ++line_no;
      fields.push_back(std::move(field));
      return true;
    } else {
      field.push_back(static_cast<char>(c));
    }
  }
  if (in_quotes) throw DataError("load_csv: unterminated quoted field", line_no);
  if (any || !field.empty()) {
    fields.push_back(std::move(field));
    ++line_no;
    return true;
  }
  return false;
}

double parse_number(const std::string& field, long line_no) {
  std::string trimmed = field;
  const auto first = trimmed.find_first_not_of(" \t");
  const auto last = trimmed.find_last_not_of(" \t");
  if (first == std::string::npos)
    throw DataError("load_csv: empty numeric field at line " + std::to_string(line_no), line_no);
  trimmed = trimmed.substr(first, last - first + 1);
  double value = 0.0;
  const char* begin = trimmed.data();
  const char* end = begin + trimmed.size();
  const auto result = std::from_chars(begin, end, value);
  if (result.ec != std::errc() || result.ptr != end)
    throw DataError("load_csv: cannot parse '" + trimmed + "' as a number at line " +
                        std::to_string(line_no),
                    line_no);
  if (!std::isfinite(value))
    throw DataError("load_csv: non-finite value '" + trimmed + "' at line " +
                        std::to_string(line_no),
                    line_no);
  return value;
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& target_column, bool has_header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("load_csv: cannot open '" + path + "'");

  long line_no = 0;
  std::vector<std::string> fields;
  std::vector<std::string> header;
  if (has_header) {
    if (!read_record(in, header, line_no))
      throw DataError("load_csv: '" + path + "' is empty", line_no);
  }

  // Target: header name first, otherwise a zero-based column index.
  long target_idx = -1;
  if (has_header) {
    const auto it = std::find(header.begin(), header.end(), target_column);
    if (it != header.end()) target_idx = it - header.begin();
  }
  if (target_idx < 0) {
    long idx = 0;
    const auto [ptr, ec] =
        std::from_chars(target_column.data(), target_column.data() + target_column.size(), idx);
    if (ec == std::errc() && ptr == target_column.data() + target_column.size() && idx >= 0) {
      target_idx = idx;
    } else {
      throw DataError("load_csv: target column '" + target_column + "' not found");
    }
  }

  std::vector<std::vector<double>> rows;
  std::size_t width = 0;
  while (read_record(in, fields, line_no)) {
    if (fields.size() == 1 && fields[0].empty()) continue;  // trailing blank line
    if (width == 0) {
      width = fields.size();
      if (width < 2)
        throw DataError("load_csv: need at least one feature and one target column", line_no);
      if (static_cast<std::size_t>(target_idx) >= width)
        throw DataError("load_csv: target column index " + std::to_string(target_idx) +
                            " out of range for " + std::to_string(width) + " columns",
                        line_no);
    } else if (fields.size() != width) {
      throw DataError("load_csv: ragged row at line " + std::to_string(line_no) + " (" +
                          std::to_string(fields.size()) + " fields, expected " +
                          std::to_string(width) + ")",
                      line_no);
    }
    std::vector<double> row(width);
    for (std::size_t j = 0; j < width; ++j) row[j] = parse_number(fields[j], line_no);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError("load_csv: no data rows in '" + path + "'");

  Dataset ds;
  const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index d = static_cast<Eigen::Index>(width) - 1;
  ds.X.resize(n, d);
  ds.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index col = 0;
    for (std::size_t j = 0; j < width; ++j) {
      if (static_cast<long>(j) == target_idx) {
        ds.y(i) = rows[static_cast<std::size_t>(i)][j];
      } else {
        ds.X(i, col++) = rows[static_cast<std::size_t>(i)][j];
      }
    }
  }
  if (has_header) {
    for (std::size_t j = 0; j < width; ++j) {
      if (static_cast<long>(j) != target_idx) ds.column_names.push_back(header[j]);
    }
  }
  return ds;
}

Scaler fit_scaler(const Dataset& train, double margin) {
  if (train.n() < 1) throw InvalidParameterError("fit_scaler: empty dataset");
  if (!(margin > 0.0)) throw InvalidParameterError("fit_scaler: margin must be positive");
  Scaler scaler;
  scaler.margin = margin;
  scaler.col_min = train.X.colwise().minCoeff();
  scaler.col_max = train.X.colwise().maxCoeff();
  return scaler;
}

Eigen::MatrixXd apply_scaler(const Scaler& scaler, const Eigen::Ref<const Eigen::MatrixXd>& X,
                             std::size_t* clipped_count) {
  if (X.cols() != scaler.col_min.size())
    throw InvalidParameterError("apply_scaler: column count mismatch");
  const double u = scaler.half_width();
  std::size_t clipped = 0;
  Eigen::MatrixXd out(X.rows(), X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double lo = scaler.col_min(j);
    const double range = scaler.col_max(j) - lo;
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      double v = range > 0.0 ? (X(i, j) - lo) / range - 0.5 : 0.0;
      if (v < -u) {
        v = -u;
        ++clipped;
      } else if (v > u) {
        v = u;
        ++clipped;
      }
      out(i, j) = v;
    }
  }
  if (clipped_count != nullptr) *clipped_count = clipped;
  return out;
}

std::tuple<Eigen::VectorXd, double, double> standardize_targets(
    const Eigen::Ref<const Eigen::VectorXd>& y) {
  if (y.size() < 1) throw InvalidParameterError("standardize_targets: empty target vector");
  const double mean = y.mean();
  const double variance = (y.array() - mean).square().mean();
  const double std_dev = std::sqrt(variance);
  Eigen::VectorXd standardized = y.array() - mean;
  if (std_dev > 0.0) standardized /= std_dev;
  return {standardized, mean, std_dev};
}

Eigen::VectorXd destandardize(const Eigen::Ref<const Eigen::VectorXd>& predictions, double mean,
                              double std_dev) {
  const double scale = std_dev > 0.0 ? std_dev : 1.0;
  return (predictions.array() * scale + mean).matrix();
}

std::pair<Dataset, Dataset> split(const Dataset& dataset, double train_fraction,
                                  std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw InvalidParameterError("split: train_fraction must lie in (0, 1)");
  const Eigen::Index n = dataset.n();
  const Eigen::Index n_train =
      static_cast<Eigen::Index>(std::ceil(train_fraction * static_cast<double>(n)));
  const Eigen::Index n_test = n - n_train;
  if (n_train < 1 || n_test < 1)
    throw InvalidParameterError("split: both sides must be nonempty (N = " + std::to_string(n) +
                                ", fraction = " + std::to_string(train_fraction) + ")");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng(seed);
  shuffle(order, rng);

  auto take = [&](Eigen::Index begin, Eigen::Index count) {
    Dataset part;
    part.X.resize(count, dataset.dims());
    part.y.resize(count);
    for (Eigen::Index i = 0; i < count; ++i) {
      part.X.row(i) = dataset.X.row(order[static_cast<std::size_t>(begin + i)]);
      part.y(i) = dataset.y(order[static_cast<std::size_t>(begin + i)]);
    }
    part.column_names = dataset.column_names;
    return part;
  };
  return {take(0, n_train), take(n_train, n_test)};
}

}  // namespace tkrr
