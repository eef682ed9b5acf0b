#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "raf/errors.hpp"
#include "raf/quality_gap.hpp"

namespace {

using raf::Shape;
using raf::Tensor;
using raf::dsp::Waveform;
namespace q = raf::quality;
constexpr double kPi = std::numbers::pi;

Waveform noise(std::size_t n, std::uint64_t seed, double rate, double amp = 0.3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, amp);
  std::vector<double> x(n);
  for (double& v : x) v = d(rng);
  return Waveform(std::move(x), rate);
}

Waveform harmonic(std::size_t n, double f0, double rate) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i)
    for (int h = 1; h <= 3; ++h)
      x[i] += 0.3 / h * std::sin(2 * kPi * h * f0 * static_cast<double>(i) / rate);
  return Waveform(std::move(x), rate);
}

double cosine_form(const Tensor& a, const Tensor& b) {
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  return (2.0 - 2.0 * ab / std::sqrt(aa * bb)) / static_cast<double>(a.size());
}

TEST(EmbeddingGap, IdenticalIsZero) {
  const Tensor a = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(q::normalized_embedding_gap(a, a), 0.0);
  const Waveform y = noise(8000, 1, 16000.0);
  EXPECT_EQ(q::normalized_embedding_gap(y, y, q::make_extractor_w()), 0.0);
}

TEST(EmbeddingGap, OrthogonalAndAntipodal) {
  // T = 2, C = 2.
  const Tensor a = Tensor::matrix(2, 2, {1, 0, 0, 0});
  const Tensor b = Tensor::matrix(2, 2, {0, 0, 0, 3});
  EXPECT_NEAR(q::normalized_embedding_gap(a, b), 2.0 / 4.0, 1e-15);
  const Tensor c = Tensor::matrix(2, 2, {1, -2, 0.5, 4});
  Tensor neg = c;
  for (double& v : neg.data()) v = -2.5 * v;
  EXPECT_NEAR(q::normalized_embedding_gap(c, neg), 4.0 / 4.0, 1e-15);
}

TEST(EmbeddingGap, MatchesCosineForm) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> d;
  for (int trial = 0; trial < 20; ++trial) {
    Tensor a(Shape{7, 5}), b(Shape{7, 5});
    for (double& v : a.data()) v = d(rng);
    for (double& v : b.data()) v = d(rng);
    EXPECT_NEAR(q::normalized_embedding_gap(a, b), cosine_form(a, b), 1e-12);
  }
}

TEST(EmbeddingGap, Errors) {
  const Tensor a = Tensor::matrix(2, 2, {1, 2, 3, 4});
  EXPECT_THROW(q::normalized_embedding_gap(a, Tensor(a.shape())), raf::DegenerateEmbedding);
  EXPECT_THROW(q::normalized_embedding_gap(a, Tensor::matrix(1, 2, {1, 2})),
               raf::ContractViolation);
  EXPECT_THROW(q::normalized_embedding_gap(noise(100, 1, 16000.0), noise(120, 2, 16000.0),
                                           q::make_extractor_w()),
               raf::ContractViolation);
}

TEST(EmbeddingGap, ResamplesToExtractorRate) {
  const Waveform y = noise(4800, 4, 24000.0), g = noise(4800, 5, 24000.0);
  const auto ex = q::make_extractor_w();
  const double direct = q::normalized_embedding_gap(
      ex.embed(raf::dsp::sinc_resample(y, 16000.0)),
      ex.embed(raf::dsp::sinc_resample(g, 16000.0)));
  EXPECT_EQ(q::normalized_embedding_gap(y, g, ex), direct);
}

TEST(BaselineExtractor, ShapesAndDeterminism) {
  const auto w = q::make_extractor_w();
  const auto h = q::make_extractor_h();
  EXPECT_EQ(w.channels(), 24u);
  EXPECT_EQ(h.channels(), 32u);
  const Waveform x = noise(16000, 6, 16000.0);
  const Tensor e = w.embed(x);
  EXPECT_EQ(e.shape(), (Shape{1 + 16000 / 320, 24}));
  EXPECT_TRUE(std::ranges::equal(w.embed(x).data(), e.data()));
  EXPECT_TRUE(std::ranges::equal(q::baseline_extractor(x).data(), e.data()));
  EXPECT_THROW(w.embed(noise(1000, 7, 24000.0)), raf::ContractViolation);
}

TEST(BaselineExtractor, OneHopShiftShiftsRows) {
  const auto ex = q::make_extractor_w();
  const std::size_t hop = ex.config().hop_size, n = 16000;
  const double rate = 16000.0, f0 = 220.0;
  const Tensor a = ex.embed(harmonic(n, f0, rate));
  // The same stationary tone delayed by exactly one hop.
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i)
    for (int k = 1; k <= 3; ++k)
      d[i] += 0.3 / k *
              std::sin(2 * kPi * k * f0 * (static_cast<double>(i) - static_cast<double>(hop)) / rate);
  const Tensor c = ex.embed(Waveform(d, rate));
  const std::size_t rows = a.dim(0), cols = a.dim(1);
  for (std::size_t t = 3; t + 3 < rows; ++t)
    for (std::size_t j = 0; j < cols; ++j)
      EXPECT_NEAR(c.at(t, j), a.at(t - 1, j), 1e-9) << "row " << t << " col " << j;
}

TEST(BaselineExtractor, DoublingLengthDoublesFrames) {
  const auto ex = q::make_extractor_w();
  for (std::size_t n : {3200u, 5000u, 16000u}) {
    const double t1 = static_cast<double>(ex.embed(noise(n, 8, 16000.0)).dim(0));
    const double t2 = static_cast<double>(ex.embed(noise(2 * n, 8, 16000.0)).dim(0));
    EXPECT_LE(std::fabs(t2 - 2 * t1), 1.0);
  }
  std::size_t prev = 0;
  for (std::size_t n = 512; n < 6000; n += 97) {
    const std::size_t t = ex.embed(noise(n, 9, 16000.0)).dim(0);
    EXPECT_GE(t, prev);
    prev = t;
  }
}

struct Fixture {
  q::BaselineExtractor w = q::make_extractor_w();
  q::BaselineExtractor h = q::make_extractor_h();
  std::vector<const q::EmbeddingExtractor*> both{&w, &h};
  std::vector<raf::dsp::StftConfig> res = raf::dsp::default_resolutions();
};

TEST(QualityGapVector, IdenticalInputsGiveZeros) {
  Fixture f;
  const Waveform y = noise(12000, 10, 24000.0);
  const std::vector<double> alphas{10000, 10000, 1};
  const auto v = q::quality_gap_vector(y, y, f.both, alphas, f.res);
  ASSERT_EQ(v.size(), 3u);
  for (double c : v.components) EXPECT_EQ(c, 0.0);
}

TEST(QualityGapVector, TermByTerm) {
  Fixture f;
  const Waveform y = harmonic(12000, 200.0, 24000.0);
  Waveform g = y;
  for (std::size_t i = 0; i < g.size(); ++i) g.samples[i] += 0.05 * std::sin(0.37 * i * i);
  const std::vector<double> alphas{10000, 10000, 1};
  const auto v = q::quality_gap_vector(y, g, f.both, alphas, f.res);
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v.component_ids,
            (std::vector<std::string>{f.w.id(), f.h.id(), q::kMstftComponentId}));
  EXPECT_EQ(v.scales, alphas);
  const double qw = q::normalized_embedding_gap(y, g, f.w);
  const double qh = q::normalized_embedding_gap(y, g, f.h);
  const double qm = raf::dsp::mstft_distance(y, g, f.res);
  EXPECT_DOUBLE_EQ(v.unscaled[0], qw);
  EXPECT_DOUBLE_EQ(v.unscaled[1], qh);
  EXPECT_DOUBLE_EQ(v.unscaled[2], qm);
  EXPECT_DOUBLE_EQ(v.components[0], 10000 * qw);
  EXPECT_DOUBLE_EQ(v.components[1], 10000 * qh);
  EXPECT_DOUBLE_EQ(v.components[2], qm);
  for (double c : v.components) EXPECT_GT(c, 0.0);
}

TEST(QualityGapVector, DoublingAlphaM) {
  Fixture f;
  const Waveform y = noise(9000, 11, 24000.0), g = noise(9000, 12, 24000.0);
  const std::vector<double> a1{3.0, 5.0, 0.7}, a2{3.0, 5.0, 1.4};
  const auto v1 = q::quality_gap_vector(y, g, f.both, a1, f.res);
  const auto v2 = q::quality_gap_vector(y, g, f.both, a2, f.res);
  EXPECT_EQ(v2.components[0], v1.components[0]);
  EXPECT_EQ(v2.components[1], v1.components[1]);
  EXPECT_EQ(v2.components[2], 2.0 * v1.components[2]);
}

TEST(QualityGapVector, PermutationEquivariant) {
  Fixture f;
  const Waveform y = noise(9000, 13, 24000.0), g = noise(9000, 14, 24000.0);
  const std::vector<const q::EmbeddingExtractor*> swapped{&f.h, &f.w};
  const auto v = q::quality_gap_vector(y, g, f.both, std::vector<double>{2, 3, 1}, f.res);
  const auto s = q::quality_gap_vector(y, g, swapped, std::vector<double>{3, 2, 1}, f.res);
  EXPECT_EQ(s.components[0], v.components[1]);
  EXPECT_EQ(s.components[1], v.components[0]);
  EXPECT_EQ(s.components[2], v.components[2]);
  EXPECT_EQ(s.component_ids[0], v.component_ids[1]);
}

TEST(QualityGapVector, AlphaCountMustMatch) {
  Fixture f;
  const Waveform y = noise(9000, 15, 24000.0);
  EXPECT_THROW(q::quality_gap_vector(y, y, f.both, std::vector<double>{1, 1}, f.res),
               raf::ContractViolation);
}

TEST(ToyQualityGap, Examples) {
  EXPECT_EQ(q::toy_quality_gap(4, 4), 0.0);
  EXPECT_EQ(q::toy_quality_gap(0, 4), 4.0);
  EXPECT_EQ(q::toy_quality_gap(-1.5, 2), 3.5);
  EXPECT_EQ(q::toy_quality_gap(2, -1.5), 3.5);
}

TEST(AlphaCalibration, ReciprocalOfMeans) {
  const auto a = q::alphas_from_unscaled({{0.5e-4, 1e-4, 0.5}, {1.5e-4, 3e-4, 1.5}});
  ASSERT_EQ(a.size(), 3u);
  EXPECT_NEAR(a[0], 1e4, 1e-8);
  EXPECT_NEAR(a[1], 5e3, 1e-8);
  EXPECT_NEAR(a[2], 1.0, 1e-15);
  const auto ones = q::alphas_from_unscaled({{1, 1, 1}, {1, 1, 1}});
  EXPECT_EQ(ones, (std::vector<double>{1, 1, 1}));
}

TEST(AlphaCalibration, Errors) {
  EXPECT_THROW(q::alphas_from_unscaled({{1, 0, 1}, {2, 0, 1}}), raf::DegenerateCalibration);
  EXPECT_THROW(q::alphas_from_unscaled({}), raf::ContractViolation);
  EXPECT_THROW(q::alphas_from_unscaled({{1, 1}, {1}}), raf::ContractViolation);
}

TEST(AlphaCalibration, RescaledMeansAreOne) {
  Fixture f;
  std::vector<q::WaveformPair> batch;
  for (std::uint64_t s = 0; s < 4; ++s) {
    Waveform y = harmonic(9600, 150.0 + 40.0 * s, 24000.0);
    Waveform g = y;
    const Waveform n = noise(9600, 100 + s, 24000.0, 0.02 * (s + 1));
    for (std::size_t i = 0; i < g.size(); ++i) g.samples[i] += n.samples[i];
    batch.emplace_back(std::move(y), std::move(g));
  }
  const auto alphas = q::alpha_calibration(batch, f.both, f.res);
  ASSERT_EQ(alphas.size(), 3u);
  std::vector<double> means(3, 0.0);
  for (const auto& [y, g] : batch) {
    const auto v = q::quality_gap_vector(y, g, f.both, alphas, f.res);
    for (std::size_t k = 0; k < 3; ++k) means[k] += v.components[k] / batch.size();
  }
  for (double m : means) EXPECT_NEAR(m, 1.0, 1e-12);
}

}  // namespace
