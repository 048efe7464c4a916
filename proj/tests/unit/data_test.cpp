#include <cmath>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include <cac/data.hpp>
#include <cac/error.hpp>

namespace {

using cac::LabeledDataset;
using cac::Matrix;

std::vector<double> class_mean(const LabeledDataset& ds, int label) {
  std::vector<double> mean(ds.input_width(), 0.0);
  std::size_t count = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.y[i] != label) continue;
    ++count;
    for (std::size_t d = 0; d < mean.size(); ++d) mean[d] += ds.x(i, d);
  }
  for (double& m : mean) m /= static_cast<double>(count);
  return mean;
}

TEST(Blobs, DefaultCountsAndLabels) {
  const auto [source, target] = cac::generate_two_domain_blobs(cac::default_shift_spec());
  EXPECT_EQ(source.class_counts(), (std::vector<std::size_t>{100, 100, 100}));
  EXPECT_EQ(target.class_counts(), (std::vector<std::size_t>{100, 100, 100}));
  EXPECT_EQ(source.domain, cac::Domain::source);
  EXPECT_EQ(target.domain, cac::Domain::target);
  for (int y : target.y) {
    EXPECT_GE(y, 0);
    EXPECT_LT(y, 3);
  }
}

TEST(Blobs, DeterministicInSpec) {
  const auto spec = cac::default_shift_spec();
  EXPECT_EQ(cac::generate_two_domain_blobs(spec), cac::generate_two_domain_blobs(spec));
  auto other = spec;
  other.seed = 1;
  EXPECT_NE(cac::generate_two_domain_blobs(spec).first,
            cac::generate_two_domain_blobs(other).first);
}

TEST(Blobs, NullShiftMatchesSourceStatistics) {
  auto spec = cac::default_shift_spec();
  spec.rotation_degrees = 0.0;
  spec.translation = {0.0, 0.0};
  spec.n_source = spec.n_target = 3000;
  const auto [source, target] = cac::generate_two_domain_blobs(spec);
  for (int c = 0; c < 3; ++c) {
    const auto ms = class_mean(source, c);
    const auto mt = class_mean(target, c);
    for (std::size_t d = 0; d < 2; ++d) {
      EXPECT_NEAR(ms[d], spec.centers(static_cast<std::size_t>(c), d), 0.1);
      EXPECT_NEAR(mt[d], ms[d], 0.1);
    }
  }
}

TEST(Blobs, TargetIsRotatedAboutCentroidThenTranslated) {
  auto spec = cac::default_shift_spec();
  spec.n_source = spec.n_target = 6000;
  const auto [source, target] = cac::generate_two_domain_blobs(spec);
  // Centroid of (-2,0), (2,0), (0,8) is (0, 8/3).
  const double theta = spec.rotation_degrees * 3.14159265358979323846 / 180.0;
  const double cx = 0.0, cy = 8.0 / 3.0;
  for (int c = 0; c < 3; ++c) {
    const double px = spec.centers(static_cast<std::size_t>(c), 0) - cx;
    const double py = spec.centers(static_cast<std::size_t>(c), 1) - cy;
    const double ex = cx + std::cos(theta) * px - std::sin(theta) * py + spec.translation[0];
    const double ey = cy + std::sin(theta) * px + std::cos(theta) * py + spec.translation[1];
    const auto m = class_mean(target, c);
    EXPECT_NEAR(m[0], ex, 0.05);
    EXPECT_NEAR(m[1], ey, 0.05);
  }
}

TEST(Blobs, TargetProportions) {
  auto spec = cac::default_shift_spec();
  spec.target_proportions = std::vector<double>{0.5, 0.25, 0.25};
  const auto [source, target] = cac::generate_two_domain_blobs(spec);
  EXPECT_EQ(source.class_counts(), (std::vector<std::size_t>{100, 100, 100}));
  EXPECT_EQ(target.class_counts(), (std::vector<std::size_t>{150, 75, 75}));
}

TEST(Blobs, DegenerateSpecRejected) {
  auto spec = cac::default_shift_spec();
  spec.cluster_std = 0.0;
  EXPECT_THROW(cac::generate_two_domain_blobs(spec), cac::ConfigError);
  spec = cac::default_shift_spec();
  spec.n_target = 2;
  EXPECT_THROW(cac::generate_two_domain_blobs(spec), cac::ConfigError);
  spec = cac::default_shift_spec();
  spec.centers = Matrix(2, 2);
  EXPECT_THROW(cac::generate_two_domain_blobs(spec), cac::ConfigError);
}

TEST(RoundedCounts, HalfAwayFromZero) {
  const std::vector<double> p{0.5, 0.25, 0.25};
  EXPECT_EQ(cac::rounded_class_counts(100, p), (std::vector<std::size_t>{50, 25, 25}));
  EXPECT_EQ(cac::rounded_class_counts(10, p), (std::vector<std::size_t>{5, 3, 3}));
}

class Imbalance : public ::testing::Test {
 protected:
  LabeledDataset balanced = [] {
    auto spec = cac::default_shift_spec();
    spec.n_target = 99;
    return cac::generate_two_domain_blobs(spec).second;
  }();
};

TEST_F(Imbalance, HundredSamplesHalfQuarterQuarter) {
  auto spec = cac::default_shift_spec();
  spec.n_target = 100;
  const auto ds = cac::generate_two_domain_blobs(spec).second;
  const std::vector<double> p{0.5, 0.25, 0.25};
  const auto out = cac::apply_imbalance(ds, p, 3);
  EXPECT_EQ(out.class_counts(), (std::vector<std::size_t>{50, 25, 25}));
  EXPECT_EQ(out.size(), 100u);
}

TEST_F(Imbalance, UniformProportionsKeepCounts) {
  const std::vector<double> p(3, 1.0 / 3.0);
  EXPECT_EQ(cac::apply_imbalance(balanced, p, 1).class_counts(), balanced.class_counts());
}

TEST_F(Imbalance, RowsComeFromTheInput) {
  const std::vector<double> p{0.2, 0.2, 0.6};
  const auto out = cac::apply_imbalance(balanced, p, 9);
  for (std::size_t i = 0; i < out.size(); ++i) {
    bool found = false;
    for (std::size_t j = 0; j < balanced.size() && !found; ++j) {
      found = out.y[i] == balanced.y[j] && out.x(i, 0) == balanced.x(j, 0) &&
              out.x(i, 1) == balanced.x(j, 1);
    }
    ASSERT_TRUE(found) << "row " << i;
  }
}

TEST_F(Imbalance, ProportionsMustSumToOne) {
  const std::vector<double> p{0.4, 0.25, 0.25};
  EXPECT_THROW(cac::apply_imbalance(balanced, p, 0), std::invalid_argument);
}

TEST(DatasetCsv, RoundTripIsExact) {
  const auto [source, target] = cac::generate_two_domain_blobs(cac::default_shift_spec());
  std::stringstream ss;
  cac::write_dataset_csv(target, ss);
  const auto back = cac::read_dataset_csv(ss, 3, cac::Domain::target);
  EXPECT_EQ(back, target);
}

TEST(DatasetCsv, HandWrittenFile) {
  std::istringstream in("x0,x1,x2,label\n1,2,3,0\n-0.5,0.25,1e3,2\n4,5,6,1\n");
  const auto ds = cac::read_dataset_csv(in);
  EXPECT_EQ(ds.size(), 3u);
  EXPECT_EQ(ds.input_width(), 3u);
  EXPECT_EQ(ds.num_classes, 3u);
  EXPECT_EQ(ds.y, (std::vector<int>{0, 2, 1}));
  EXPECT_EQ(ds.x(1, 2), 1000.0);
}

void expect_parse_error(const std::string& text, const std::string& fragment) {
  std::istringstream in(text);
  try {
    cac::read_dataset_csv(in);
    FAIL() << "expected ParseError for: " << text;
  } catch (const cac::ParseError& e) {
    EXPECT_NE(std::string(e.what()).find(fragment), std::string::npos) << e.what();
  }
}

TEST(DatasetCsv, MalformedInputsNameTheLine) {
  expect_parse_error("a,b\n1,0\n", "line 1");
  expect_parse_error("x0,x1,label\n1,2,0\n1,0\n", "line 3");
  expect_parse_error("x0,x1,label\n1,2,0.5\n", "line 2");
  expect_parse_error("x0,x1,label\n1,zz,0\n", "line 2");
}

TEST(DatasetCsv, LabelBeyondClassCountRejected) {
  std::istringstream in("x0,label\n1,4\n");
  EXPECT_THROW(cac::read_dataset_csv(in, 3), cac::ParseError);
}

}  // namespace
