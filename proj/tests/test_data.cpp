#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "auxit/costs.hpp"
#include "auxit/data.hpp"
#include "auxit/error.hpp"
#include "auxit/io.hpp"

using namespace auxit;

namespace {

const std::filesystem::path kFixtures = AUXIT_FIXTURE_DIR;

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "auxit_test_data";
  std::filesystem::create_directories(dir);
  return dir / name;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Io;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Idx, FixtureValues) {
  const auto d = load_idx(kFixtures / "tiny-images.idx3", kFixtures / "tiny-labels.idx1");
  ASSERT_EQ(d.size(), 2);
  ASSERT_EQ(d.dim(), 6);
  EXPECT_EQ(d.inputs(0, 4), 254.0);
  EXPECT_EQ(d.inputs(0, 5), 255.0);
  EXPECT_EQ(d.inputs(1, 0), 10.0);
  EXPECT_EQ(d.labels, (Labels{7, 2}));
  EXPECT_EQ(d.num_classes, 8);
}

TEST(Idx, ErrorCodes) {
  const auto images = slurp(kFixtures / "tiny-images.idx3");
  const auto labels = slurp(kFixtures / "tiny-labels.idx1");
  auto read = [](std::string img, std::string lab) {
    std::istringstream i(img), l(lab);
    return read_idx(i, l);
  };
  EXPECT_EQ(code_of([&] { read(labels, labels); }), ErrorCode::BadMagic);
  EXPECT_EQ(code_of([&] { read(images, images); }), ErrorCode::BadMagic);
  EXPECT_EQ(code_of([&] { read(images.substr(0, images.size() - 1), labels); }),
            ErrorCode::Truncated);
  EXPECT_EQ(code_of([&] { read(images.substr(0, 6), labels); }), ErrorCode::Truncated);
  std::string one_label = labels;
  one_label[7] = 1;  // count field, big-endian
  one_label.pop_back();
  EXPECT_EQ(code_of([&] { read(images, one_label); }), ErrorCode::CountMismatch);
  EXPECT_EQ(code_of([&] { load_idx(kFixtures / "missing", kFixtures / "missing"); }), ErrorCode::Io);
}

TEST(Csv, FixtureLabelsAreShifted) {
  const auto d = load_csv(kFixtures / "three_rows.csv", 2);
  ASSERT_EQ(d.size(), 3);
  ASSERT_EQ(d.dim(), 2);
  EXPECT_EQ(d.inputs(0, 1), 1.25);
  EXPECT_EQ(d.inputs(1, 0), -2.0);
  EXPECT_EQ(d.labels, (Labels{0, 1, 2}));
  EXPECT_EQ(d.num_classes, 3);

  std::istringstream leading("2,0.5,1.5\n1,4,8\n");
  const auto first = read_csv(leading, 0);
  EXPECT_EQ(first.inputs(0, 0), 0.5);
  EXPECT_EQ(first.inputs(1, 1), 8.0);
  EXPECT_EQ(first.labels, (Labels{1, 0}));
}

TEST(Csv, Errors) {
  EXPECT_EQ(code_of([] { load_csv(kFixtures / "single_column.csv", 0); }),
            ErrorCode::InvalidArgument);
  std::istringstream ragged("1,2,1\n3,1\n");
  EXPECT_EQ(code_of([&] { read_csv(ragged, 2); }), ErrorCode::ParseError);
  std::istringstream junk("1,abc,1\n");
  EXPECT_EQ(code_of([&] { read_csv(junk, 2); }), ErrorCode::ParseError);
  std::istringstream zero_label("1,2,0\n");
  EXPECT_EQ(code_of([&] { read_csv(zero_label, 2); }), ErrorCode::LabelOutOfRange);
  std::istringstream fractional("1,2,1.5\n");
  EXPECT_EQ(code_of([&] { read_csv(fractional, 2); }), ErrorCode::LabelOutOfRange);
}

TEST(Scaling, TrainStatisticsOnly) {
  Dataset train;
  train.inputs.resize(3, 2);
  train.inputs << 0.0, 5.0, 2.0, 5.0, 4.0, 5.0;
  train.labels = {0, 1, 0};
  train.num_classes = 2;
  Dataset test = train;
  test.inputs.resize(1, 2);
  test.inputs << 6.0, 7.0;
  test.labels = {1};

  const auto pair = scale_unit(train, test);
  EXPECT_EQ(pair.train.inputs.col(0), (VectorXd(3) << 0.0, 0.5, 1.0).finished());
  EXPECT_TRUE(pair.train.inputs.col(1).isZero(0.0));
  EXPECT_EQ(pair.test.inputs(0, 0), 1.5);  // no clipping
  EXPECT_EQ(pair.test.inputs(0, 1), 0.0);
  ASSERT_TRUE(pair.test.scaling.has_value());
  EXPECT_EQ(*pair.test.scaling, fit_scaling(train));

  // Rescaling data already in [0, 1] with its own statistics is the identity.
  const auto again = scale_unit(pair.train, pair.train);
  EXPECT_EQ(again.train.inputs, pair.train.inputs);
}

TEST(Imbalance, CountsAndOrder) {
  Dataset d;
  d.num_classes = 5;
  for (int k = 0; k < 5; ++k) {
    for (int i = 0; i < 10; ++i) d.labels.push_back(k);
  }
  d.inputs.resize(50, 1);
  for (Eigen::Index n = 0; n < 50; ++n) d.inputs(n, 0) = static_cast<double>(n);

  const auto imb = make_imbalanced(d, 0.4, 0.7, 3);
  const auto counts = imb.class_counts();
  int reduced = 0;
  for (auto c : counts) {
    EXPECT_TRUE(c == 10 || c == 3) << c;
    reduced += c == 3;
  }
  EXPECT_EQ(reduced, 2);
  for (Eigen::Index n = 1; n < imb.size(); ++n) EXPECT_LT(imb.inputs(n - 1, 0), imb.inputs(n, 0));
  EXPECT_EQ(imb, make_imbalanced(d, 0.4, 0.7, 3));

  EXPECT_EQ(code_of([&] { make_imbalanced(d, 0.4, 1.0, 3); }), ErrorCode::EmptyClass);
  EXPECT_EQ(code_of([&] { make_imbalanced(d, 1.4, 0.5, 3); }), ErrorCode::InvalidArgument);
}

TEST(Synthetic, DeterministicSplits) {
  const auto a = synth_blobs(3, 4, {10, 20, 5}, 1.0, 8);
  const auto b = synth_blobs(3, 4, {10, 20, 5}, 1.0, 8);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  EXPECT_EQ(a.train.class_counts(), (std::vector<std::size_t>{8, 16, 4}));
  EXPECT_EQ(a.test.class_counts(), (std::vector<std::size_t>{2, 4, 1}));
  EXPECT_EQ(a.test.split, Split::Test);
  EXPECT_FALSE(a.train == synth_blobs(3, 4, {10, 20, 5}, 1.0, 9).train);
  EXPECT_THROW(synth_blobs(3, 4, {10, 1, 5}, 1.0, 8), Error);
}

TEST(TakeFirst, Limits) {
  const auto a = synth_blobs(2, 2, {10, 10}, 1.0, 1).train;
  EXPECT_EQ(take_first(a, 5).size(), 5);
  EXPECT_EQ(take_first(a, 5).labels[0], a.labels[0]);
  EXPECT_EQ(take_first(a, 500).size(), a.size());
}

TEST(DatasetArchive, RoundTripIsExact) {
  auto pair = synth_blobs(3, 5, {6, 9, 4}, 0.7, 2);
  pair = scale_unit(pair.train, pair.test);
  const auto cs = cast_matrix_to_vectors(pair.train, randomized_proportional(pair.train, 4));
  const auto path = scratch("round_trip.axds");
  save_dataset(path, cs);
  EXPECT_EQ(load_dataset(path), cs);

  auto unscaled = cs;
  unscaled.data.scaling.reset();
  unscaled.data.split = Split::Test;
  save_dataset(path, unscaled);
  EXPECT_EQ(load_dataset(path), unscaled);
}

TEST(DatasetArchive, RejectsForeignAndTruncated) {
  const auto path = scratch("foreign.bin");
  write_text_file(path, "XXXX0000");
  EXPECT_EQ(code_of([&] { load_dataset(path); }), ErrorCode::BadMagic);

  const auto cs = cast_matrix_to_vectors(synth_blobs(2, 2, {4, 4}, 1.0, 1).train,
                                         CostMatrix::zero_one(2));
  save_dataset(path, cs);
  auto bytes = slurp(path);
  write_text_file(path, bytes.substr(0, bytes.size() - 3));
  EXPECT_EQ(code_of([&] { load_dataset(path); }), ErrorCode::Truncated);
}

TEST(Io, FormatRealRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 12345.678, 0.0}) {
    EXPECT_EQ(parse_real(format_real(v), "test"), v);
  }
  EXPECT_THROW(parse_real("1.0x", "test"), Error);
  EXPECT_THROW(parse_real("", "test"), Error);
}
