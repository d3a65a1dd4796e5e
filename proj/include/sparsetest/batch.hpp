#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "sparsetest/errors.hpp"
#include "sparsetest/models.hpp"
#include "sparsetest/numeric.hpp"
#include "sparsetest/rng.hpp"

namespace sparsetest {

class WeightVector {
 public:
  explicit WeightVector(std::vector<double> entries) : entries_(std::move(entries)) {
    if (entries_.empty()) throw EmptyVector("weight vector must have length >= 1");
    CompensatedSum sq;
    for (double w : entries_) {
      if (!std::isfinite(w)) throw DomainError("weight entries must be finite");
      sq.add(w * w);
    }
    norm2_ = std::sqrt(sq.value());
  }

  const std::vector<double>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  double operator[](std::size_t i) const { return entries_[i]; }
  double norm2() const { return norm2_; }

  std::vector<std::size_t> support(double tol = 0.0) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < entries_.size(); ++i)
      if (std::abs(entries_[i]) > tol) idx.push_back(i);
    return idx;
  }

 private:
  std::vector<double> entries_;
  double norm2_;
};

struct BatchMeta {
  std::string marginal_kind;
  std::string noise_kind;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::size_t m = 0;
};

// m measurement rows plus labels y_i = w . x_i + eta_i.
struct SampleBatch {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> x;  // row-major rows x cols
  std::vector<double> y;
  BatchMeta meta;
  bool symmetrized = false;

  double at(std::size_t i, std::size_t j) const { return x[i * cols + j]; }
  double& at(std::size_t i, std::size_t j) { return x[i * cols + j]; }
};

// Rows are generated from independent substreams keyed by (seed, row), so
// the result does not depend on generation order or worker count.
inline SampleBatch sample_dataset(const MarginalModel& marginal, const NoiseModel& noise,
                                  const WeightVector& w, std::size_t m, std::uint64_t seed) {
  if (m < 1) throw DomainError("need m >= 1 rows");
  const std::size_t n = w.size();
  SampleBatch batch;
  batch.rows = m;
  batch.cols = n;
  batch.x.resize(m * n);
  batch.y.resize(m);
  batch.meta = BatchMeta{marginal.kind_name(), noise.kind_name(), seed, n, m};
  for (std::size_t i = 0; i < m; ++i) {
    Rng row_rng(derive_stream(seed, i));
    CompensatedSum dot;
    for (std::size_t j = 0; j < n; ++j) {
      const double v = marginal.sample(row_rng);
      batch.at(i, j) = v;
      dot.add(w[j] * v);
    }
    batch.y[i] = dot.value() + noise.sample(row_rng);
  }
  return batch;
}

// Label-only sampler for large m: draws marginal values only at the support
// of w (ascending index order) plus one noise value per row.  Equal in law to
// the labels of sample_dataset and deterministic in (models, w, m, seed), but
// it consumes the row substream differently, so the values are not bitwise
// those of sample_dataset.
inline std::vector<double> sample_labels(const MarginalModel& marginal, const NoiseModel& noise,
                                         const WeightVector& w, std::size_t m, std::uint64_t seed) {
  if (m < 1) throw DomainError("need m >= 1 rows");
  const auto support = w.support();
  std::vector<double> y(m);
  for (std::size_t i = 0; i < m; ++i) {
    Rng row_rng(derive_stream(seed, i));
    CompensatedSum dot;
    for (std::size_t j : support) dot.add(w[j] * marginal.sample(row_rng));
    y[i] = dot.value() + noise.sample(row_rng);
  }
  return y;
}

// Pairs consecutive rows into (row_{2i} - row_{2i+1}) / sqrt(2); the output
// marginal and noise are symmetric with unchanged variance.  An odd trailing
// row is dropped.
inline SampleBatch symmetrize_batch(const SampleBatch& batch) {
  if (batch.rows < 2) throw InsufficientSamples("symmetrization needs at least 2 rows");
  const std::size_t pairs = batch.rows / 2;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  SampleBatch out;
  out.rows = pairs;
  out.cols = batch.cols;
  out.x.resize(pairs * batch.cols);
  out.y.resize(pairs);
  out.meta = batch.meta;
  out.meta.m = pairs;
  out.symmetrized = true;
  for (std::size_t i = 0; i < pairs; ++i) {
    for (std::size_t j = 0; j < batch.cols; ++j)
      out.at(i, j) = (batch.at(2 * i, j) - batch.at(2 * i + 1, j)) * inv_sqrt2;
    out.y[i] = (batch.y[2 * i] - batch.y[2 * i + 1]) * inv_sqrt2;
  }
  return out;
}

inline std::vector<double> symmetrize_labels(const std::vector<double>& y) {
  if (y.size() < 2) throw InsufficientSamples("symmetrization needs at least 2 rows");
  const std::size_t pairs = y.size() / 2;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  std::vector<double> out(pairs);
  for (std::size_t i = 0; i < pairs; ++i) out[i] = (y[2 * i] - y[2 * i + 1]) * inv_sqrt2;
  return out;
}

inline void write_batch_csv(std::ostream& os, const SampleBatch& batch) {
  for (std::size_t j = 0; j < batch.cols; ++j) os << "x" << (j + 1) << ",";
  os << "y\n";
  os.precision(17);
  for (std::size_t i = 0; i < batch.rows; ++i) {
    for (std::size_t j = 0; j < batch.cols; ++j) os << batch.at(i, j) << ",";
    os << batch.y[i] << "\n";
  }
}

inline SampleBatch read_batch_csv(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw ValidationError("empty batch csv");
  std::size_t cols = 0;
  {
    std::stringstream hs(header);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(hs, field, ',')) fields.push_back(detail::trim(field));
    if (fields.empty() || fields.back() != "y")
      throw ValidationError("batch csv header must end with 'y'");
    cols = fields.size() - 1;
    for (std::size_t j = 0; j < cols; ++j)
      if (fields[j] != "x" + std::to_string(j + 1))
        throw ValidationError("batch csv header must be x1,...,xn,y");
  }
  SampleBatch batch;
  batch.cols = cols;
  std::string line;
  while (std::getline(is, line)) {
    if (detail::trim(line).empty()) continue;
    std::stringstream ls(line);
    std::string field;
    std::vector<double> row;
    while (std::getline(ls, field, ','))
      row.push_back(detail::parse_double(detail::trim(field), "csv field"));
    if (row.size() != cols + 1) throw ValidationError("batch csv row has wrong arity");
    for (std::size_t j = 0; j < cols; ++j) batch.x.push_back(row[j]);
    batch.y.push_back(row[cols]);
    ++batch.rows;
  }
  if (batch.rows == 0) throw ValidationError("batch csv has no data rows");
  batch.meta.n = cols;
  batch.meta.m = batch.rows;
  return batch;
}

}  // namespace sparsetest
