#include "auxit/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <random>
#include <string>

#include "auxit/error.hpp"
#include "auxit/io.hpp"

namespace auxit {

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

std::vector<std::size_t> Dataset::class_counts() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (int y : labels) {
    if (y >= 0 && y < num_classes) ++counts[static_cast<std::size_t>(y)];
  }
  return counts;
}

void Dataset::validate() const {
  if (static_cast<Eigen::Index>(labels.size()) != inputs.rows()) {
    throw Error(ErrorCode::CountMismatch, std::to_string(inputs.rows()) + " rows but " +
                                              std::to_string(labels.size()) + " labels");
  }
  for (std::size_t n = 0; n < labels.size(); ++n) {
    if (labels[n] < 0 || labels[n] >= num_classes) {
      throw Error(ErrorCode::LabelOutOfRange, "label " + std::to_string(labels[n]) + " at row " +
                                                  std::to_string(n) + " outside [0, " +
                                                  std::to_string(num_classes) + ")");
    }
  }
}

Dataset Dataset::select(const std::vector<Eigen::Index>& rows) const {
  Dataset out;
  out.inputs.resize(static_cast<Eigen::Index>(rows.size()), inputs.cols());
  out.labels.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.inputs.row(static_cast<Eigen::Index>(i)) = inputs.row(rows[i]);
    out.labels.push_back(labels[static_cast<std::size_t>(rows[i])]);
  }
  out.num_classes = num_classes;
  out.split = split;
  out.scaling = scaling;
  return out;
}

bool Dataset::operator==(const Dataset& other) const {
  return inputs.rows() == other.inputs.rows() && inputs.cols() == other.inputs.cols() &&
         inputs == other.inputs && labels == other.labels && num_classes == other.num_classes &&
         split == other.split && scaling == other.scaling;
}

void CostSensitiveDataset::validate() const {
  data.validate();
  if (costs.rows() != data.size() || costs.cols() != data.num_classes) {
    throw Error(ErrorCode::DimensionMismatch, "cost vectors " + shape_of(costs) + " for " +
                                                  std::to_string(data.size()) + " examples of " +
                                                  std::to_string(data.num_classes) + " classes");
  }
  for (Eigen::Index n = 0; n < costs.rows(); ++n) {
    if (costs(n, data.labels[static_cast<std::size_t>(n)]) != 0.0) {
      throw Error(ErrorCode::InvalidArgument,
                  "cost vector at row " + std::to_string(n) + " is nonzero at its true class");
    }
  }
}

CostSensitiveDataset CostSensitiveDataset::select(const std::vector<Eigen::Index>& rows) const {
  CostSensitiveDataset out{data.select(rows), MatrixXd(static_cast<Eigen::Index>(rows.size()), costs.cols())};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.costs.row(static_cast<Eigen::Index>(i)) = costs.row(rows[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// IDX
// ---------------------------------------------------------------------------

namespace {

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

std::uint32_t read_be32(std::istream& in, const char* what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw Error(ErrorCode::Truncated, std::string(what) + " header is truncated");
  }
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
         std::uint32_t{b[3]};
}

std::vector<unsigned char> read_payload(std::istream& in, std::size_t bytes, const char* what) {
  std::vector<unsigned char> buf(bytes);
  if (bytes > 0 && !in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(bytes))) {
    throw Error(ErrorCode::Truncated, std::string(what) + " payload is truncated: expected " +
                                          std::to_string(bytes) + " bytes");
  }
  return buf;
}

}  // namespace

Dataset read_idx(std::istream& images, std::istream& labels) {
  const auto image_magic = read_be32(images, "IDX images");
  if (image_magic != kIdxImagesMagic) {
    throw Error(ErrorCode::BadMagic, "IDX images magic is not 0x00000803");
  }
  const auto label_magic = read_be32(labels, "IDX labels");
  if (label_magic != kIdxLabelsMagic) {
    throw Error(ErrorCode::BadMagic, "IDX labels magic is not 0x00000801");
  }
  const std::size_t n_images = read_be32(images, "IDX images");
  const std::size_t rows = read_be32(images, "IDX images");
  const std::size_t cols = read_be32(images, "IDX images");
  const std::size_t n_labels = read_be32(labels, "IDX labels");
  if (n_images != n_labels) {
    throw Error(ErrorCode::CountMismatch, std::to_string(n_images) + " images but " +
                                              std::to_string(n_labels) + " labels");
  }
  const std::size_t dim = rows * cols;
  const auto pixels = read_payload(images, n_images * dim, "IDX images");
  const auto label_bytes = read_payload(labels, n_labels, "IDX labels");

  Dataset out;
  out.inputs.resize(static_cast<Eigen::Index>(n_images), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < pixels.size(); ++i) out.inputs.data()[i] = pixels[i];
  int max_label = -1;
  for (unsigned char b : label_bytes) {
    out.labels.push_back(b);
    max_label = std::max<int>(max_label, b);
  }
  out.num_classes = max_label + 1;
  return out;
}

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path) {
  std::ifstream images(images_path, std::ios::binary);
  if (!images) throw Error(ErrorCode::Io, "cannot open " + images_path.string());
  std::ifstream labels(labels_path, std::ios::binary);
  if (!labels) throw Error(ErrorCode::Io, "cannot open " + labels_path.string());
  return read_idx(images, labels);
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

Dataset read_csv(std::istream& in, std::size_t label_column) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t width = 0;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    if (rows.empty()) {
      width = cells.size();
    } else if (cells.size() != width) {
      throw Error(ErrorCode::ParseError, "ragged row at line " + std::to_string(line_no) +
                                             ": expected " + std::to_string(width) +
                                             " cells, got " + std::to_string(cells.size()));
    }
    std::vector<double> values;
    for (const auto& cell : cells) values.push_back(parse_real(cell, "line " + std::to_string(line_no)));
    rows.push_back(std::move(values));
  }
  if (!rows.empty() && label_column >= width) {
    throw Error(ErrorCode::InvalidArgument, "label column " + std::to_string(label_column) +
                                                " outside a " + std::to_string(width) +
                                                "-column file");
  }
  if (!rows.empty() && width < 2) {
    throw Error(ErrorCode::InvalidArgument, "CSV has no feature columns (D = 0)");
  }

  Dataset out;
  const auto dim = rows.empty() ? 0 : static_cast<Eigen::Index>(width - 1);
  out.inputs.resize(static_cast<Eigen::Index>(rows.size()), dim);
  int max_label = 0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    Eigen::Index c_out = 0;
    for (std::size_t c = 0; c < width; ++c) {
      if (c == label_column) continue;
      out.inputs(static_cast<Eigen::Index>(r), c_out++) = rows[r][c];
    }
    const double label = rows[r][label_column];
    if (label < 1 || label != std::floor(label) || label > 1e9) {
      throw Error(ErrorCode::LabelOutOfRange,
                  "label in row " + std::to_string(r + 1) + " must be a positive integer");
    }
    out.labels.push_back(static_cast<int>(label) - 1);
    max_label = std::max(max_label, static_cast<int>(label));
  }
  out.num_classes = max_label;
  return out;
}

Dataset load_csv(const std::filesystem::path& path, std::size_t label_column) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  return read_csv(in, label_column);
}

// ---------------------------------------------------------------------------
// Scaling
// ---------------------------------------------------------------------------

Scaling fit_scaling(const Dataset& train) {
  Scaling s;
  if (train.size() == 0) {
    s.min = VectorXd::Zero(train.dim());
    s.max = VectorXd::Zero(train.dim());
  } else {
    s.min = train.inputs.colwise().minCoeff().transpose();
    s.max = train.inputs.colwise().maxCoeff().transpose();
  }
  return s;
}

MatrixXd apply_scaling(const Scaling& scaling, const MatrixXd& inputs) {
  if (inputs.cols() != scaling.min.size()) {
    throw Error(ErrorCode::DimensionMismatch, "scaling fitted on " +
                                                  std::to_string(scaling.min.size()) +
                                                  " features, inputs are " + shape_of(inputs));
  }
  MatrixXd out(inputs.rows(), inputs.cols());
  for (Eigen::Index d = 0; d < inputs.cols(); ++d) {
    const double range = scaling.max(d) - scaling.min(d);
    if (range > 0.0) {
      out.col(d) = (inputs.col(d).array() - scaling.min(d)) / range;
    } else {
      out.col(d).setZero();
    }
  }
  return out;
}

DatasetPair scale_unit(const Dataset& train, const Dataset& test) {
  if (train.dim() != test.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "train has " + std::to_string(train.dim()) +
                                                  " features, test has " +
                                                  std::to_string(test.dim()));
  }
  const Scaling scaling = fit_scaling(train);
  DatasetPair out{train, test};
  out.train.inputs = apply_scaling(scaling, train.inputs);
  out.test.inputs = apply_scaling(scaling, test.inputs);
  out.train.scaling = scaling;
  out.test.scaling = scaling;
  return out;
}

// ---------------------------------------------------------------------------
// Imbalanced variants and synthetic data
// ---------------------------------------------------------------------------

Dataset make_imbalanced(const Dataset& dataset, double class_fraction, double removal_fraction,
                        std::uint64_t seed) {
  if (!(class_fraction >= 0.0 && class_fraction <= 1.0) ||
      !(removal_fraction >= 0.0 && removal_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "imbalance fractions must lie in [0, 1]");
  }
  dataset.validate();
  const auto K = static_cast<std::size_t>(dataset.num_classes);
  std::mt19937_64 rng(seed);

  std::vector<int> classes(K);
  std::iota(classes.begin(), classes.end(), 0);
  std::shuffle(classes.begin(), classes.end(), rng);
  const auto reduced = std::min(
      K, static_cast<std::size_t>(std::ceil(class_fraction * static_cast<double>(K) - 1e-9)));
  classes.resize(reduced);
  std::sort(classes.begin(), classes.end());

  std::vector<bool> keep(dataset.labels.size(), true);
  for (int c : classes) {
    std::vector<std::size_t> members;
    for (std::size_t n = 0; n < dataset.labels.size(); ++n) {
      if (dataset.labels[n] == c) members.push_back(n);
    }
    const auto remove = static_cast<std::size_t>(
        std::floor(removal_fraction * static_cast<double>(members.size()) + 1e-9));
    if (!members.empty() && remove >= members.size()) {
      throw Error(ErrorCode::EmptyClass,
                  "removing " + std::to_string(remove) + " examples empties class " +
                      std::to_string(c));
    }
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t i = 0; i < remove; ++i) keep[members[i]] = false;
  }

  std::vector<Eigen::Index> rows;
  for (std::size_t n = 0; n < keep.size(); ++n) {
    if (keep[n]) rows.push_back(static_cast<Eigen::Index>(n));
  }
  return dataset.select(rows);
}

DatasetPair synth_blobs(Eigen::Index num_classes, Eigen::Index dim,
                        const std::vector<std::size_t>& per_class_counts, double spread,
                        std::uint64_t seed) {
  if (num_classes < 1 || dim < 1) {
    throw Error(ErrorCode::InvalidArgument, "synthetic data needs K >= 1 and D >= 1");
  }
  if (static_cast<Eigen::Index>(per_class_counts.size()) != num_classes) {
    throw Error(ErrorCode::InvalidArgument, "need one count per class");
  }
  for (std::size_t c : per_class_counts) {
    if (c < 2) throw Error(ErrorCode::InvalidArgument, "every class needs at least 2 examples");
  }
  if (!(spread >= 0.0)) throw Error(ErrorCode::InvalidArgument, "spread must be >= 0");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd centers(num_classes, dim);
  for (Eigen::Index i = 0; i < centers.size(); ++i) centers.data()[i] = normal(rng);

  std::vector<RowVector<double>> train_x, test_x;
  Labels train_y, test_y;
  for (Eigen::Index k = 0; k < num_classes; ++k) {
    const std::size_t count = per_class_counts[static_cast<std::size_t>(k)];
    const auto n_train = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::floor(0.8 * static_cast<double>(count) + 1e-9)), 1, count - 1);
    for (std::size_t i = 0; i < count; ++i) {
      RowVector<double> x = centers.row(k);
      for (Eigen::Index d = 0; d < dim; ++d) x(d) += spread * normal(rng);
      if (i < n_train) {
        train_x.push_back(std::move(x));
        train_y.push_back(static_cast<int>(k));
      } else {
        test_x.push_back(std::move(x));
        test_y.push_back(static_cast<int>(k));
      }
    }
  }

  // Rows are interleaved across classes so any prefix is a mixed subset.
  auto assemble = [&](const std::vector<RowVector<double>>& xs, const Labels& ys, Split split) {
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    Dataset d;
    d.inputs.resize(static_cast<Eigen::Index>(xs.size()), dim);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      d.inputs.row(static_cast<Eigen::Index>(i)) = xs[order[i]];
      d.labels.push_back(ys[order[i]]);
    }
    d.num_classes = num_classes;
    d.split = split;
    return d;
  };
  DatasetPair out;
  out.train = assemble(train_x, train_y, Split::Train);
  out.test = assemble(test_x, test_y, Split::Test);
  return out;
}

Dataset take_first(const Dataset& dataset, std::size_t limit) {
  if (limit == 0 || limit >= static_cast<std::size_t>(dataset.size())) return dataset;
  std::vector<Eigen::Index> rows(limit);
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  return dataset.select(rows);
}

// ---------------------------------------------------------------------------
// Binary cache
// ---------------------------------------------------------------------------

namespace {
constexpr std::string_view kDatasetMagic = "AXDS";
}

void save_dataset(const std::filesystem::path& path, const CostSensitiveDataset& dataset) {
  const Dataset& d = dataset.data;
  MatrixXd meta(1, 3);
  meta << static_cast<double>(d.num_classes), d.split == Split::Train ? 0.0 : 1.0,
      d.scaling ? 1.0 : 0.0;
  MatrixXd labels(d.size(), 1);
  for (Eigen::Index n = 0; n < d.size(); ++n) labels(n, 0) = d.labels[static_cast<std::size_t>(n)];
  MatrixXd smin = d.scaling ? MatrixXd(d.scaling->min.transpose()) : MatrixXd(0, 0);
  MatrixXd smax = d.scaling ? MatrixXd(d.scaling->max.transpose()) : MatrixXd(0, 0);
  const std::vector<MatrixXd> tensors = {meta, d.inputs, labels, dataset.costs, smin, smax};
  write_archive(path, kDatasetMagic, tensors);
}

CostSensitiveDataset load_dataset(const std::filesystem::path& path) {
  const auto t = read_archive(path, kDatasetMagic);
  if (t.size() != 6 || t[0].size() != 3) {
    throw Error(ErrorCode::CountMismatch, "dataset archive has unexpected layout");
  }
  CostSensitiveDataset out;
  Dataset& d = out.data;
  d.num_classes = static_cast<Eigen::Index>(t[0](0, 0));
  d.split = t[0](0, 1) == 0.0 ? Split::Train : Split::Test;
  d.inputs = t[1];
  for (Eigen::Index n = 0; n < t[2].rows(); ++n) d.labels.push_back(static_cast<int>(t[2](n, 0)));
  out.costs = t[3];
  if (t[0](0, 2) != 0.0) d.scaling = Scaling{t[4].transpose(), t[5].transpose()};
  d.validate();
  return out;
}

}  // namespace auxit
