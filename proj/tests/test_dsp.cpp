// Copyright 2026 The clearstream Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include "clearstream/dsp.hpp"
#include "support.hpp"

using namespace clearstream;
using namespace clearstream::dsp;
using clearstream::testing::noise;

namespace {

constexpr double kPi = std::numbers::pi;

double rms(std::span<const double> x) {
  double s = 0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

std::vector<double> tone(std::size_t n, double hz, double fs, double amp = 1.0, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2 * kPi * hz * static_cast<double>(i) / fs + phase);
  return x;
}

// One zero-padded, Hann-windowed frame, transformed by direct summation.
Complex direct_bin(std::span<const double> x, std::size_t start, int n, int k) {
  Complex acc = 0;
  for (int i = 0; i < n; ++i) {
    const std::size_t s = start + i;
    if (s >= x.size()) break;
    const double w = 0.5 - 0.5 * std::cos(2 * kPi * i / n);
    acc += w * x[s] * std::polar(1.0, -2 * kPi * k * i / n);
  }
  return acc;
}

}  // namespace

TEST_CASE("stft frame count and shape") {
  CHECK(stft(std::vector<double>(22400, 0.1)).time_bins == 64);
  CHECK(stft(std::vector<double>(22401, 0.1)).time_bins == 65);
  CHECK(stft(std::vector<double>(1, 0.1)).time_bins == 1);
  const auto s = stft(std::vector<double>(700, 0.0));
  CHECK(s.freq_bins == 513);
  CHECK(s.time_bins == 2);
  for (const auto& v : s.values) REQUIRE(v == Complex(0.0, 0.0));
  CHECK_THROWS_AS(stft(std::vector<double>{}), std::invalid_argument);
  CHECK_THROWS_AS(stft(std::vector<double>(100, 1.0), StftConfig{2048, 1024}), std::invalid_argument);
  CHECK_THROWS_AS(stft(WaveBuffer::stereo({1.0}, {1.0})), std::invalid_argument);
}

TEST_CASE("stft matches frozen values") {
  // Computed offline with numpy.fft.rfft on the same framing and window.
  std::vector<double> x(2000);
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] = std::sin(2 * kPi * 1000 * i / 15625.0) + 0.5 * std::cos(2 * kPi * 3000 * i / 15625.0 + 0.3);
  const auto s = stft(x);
  REQUIRE(s.time_bins == 6);
  struct Frozen {
    int t, f;
    double re, im;
  };
  const Frozen frozen[] = {
      {0, 66, -220.95271657070236, -25.096262474550766},
      {2, 66, -92.14610814496557, 202.38331202659242},
      {2, 197, -1.2707778089708637, 115.80098745249087},
      {5, 10, 1.1803588085278984, 0.4736918145562563},
      {3, 0, -0.13128610583691502, 0.0},
  };
  for (const auto& v : frozen) {
    CHECK(s.at(v.f, v.t).real() == doctest::Approx(v.re).epsilon(1e-9));
    CHECK(std::abs(s.at(v.f, v.t).imag() - v.im) < 1e-9);
  }
}

TEST_CASE("stft agrees with a direct DFT") {
  const auto x = noise(1500, 11);
  const auto s = stft(x);
  for (int t : {0, 1, 4}) {
    for (int k : {0, 1, 37, 256, 511, 512}) {
      const Complex d = direct_bin(x, static_cast<std::size_t>(t) * 350, 1024, k);
      REQUIRE(std::abs(s.at(k, t) - d) < 1e-9);
    }
  }
  // Constant input: DC of an interior frame is the window sum.
  const auto c = stft(std::vector<double>(4000, 1.0));
  double wsum = 0;
  for (double w : hann_window(1024)) wsum += w;
  CHECK(wsum == doctest::Approx(512.0));
  CHECK(std::abs(c.at(0, 3)) == doctest::Approx(wsum).epsilon(1e-12));
}

TEST_CASE("stft is linear") {
  const auto a = noise(3000, 1), b = noise(3000, 2);
  std::vector<double> mix(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) mix[i] = 2.5 * a[i] - 0.7 * b[i];
  const auto sa = stft(a), sb = stft(b), sm = stft(mix);
  double worst = 0, peak = 0;
  for (std::size_t i = 0; i < sm.values.size(); ++i) {
    worst = std::max(worst, std::abs(sm.values[i] - (2.5 * sa.values[i] - 0.7 * sb.values[i])));
    peak = std::max(peak, std::abs(sm.values[i]));
  }
  CHECK(worst <= 1e-9 * peak);
}

TEST_CASE("istft round trip") {
  const auto x = noise(350 * 40, 5);
  const auto y = istft(stft(x), StftConfig{}, x.size());
  REQUIRE(y.size() == x.size());
  const double peak = testing::max_abs(x);
  double worst = 0;
  // Interior: every sample covered by full windows on both sides.
  for (std::size_t i = 1024; i < x.size() - 1024; ++i) worst = std::max(worst, std::abs(x[i] - y[i]));
  CHECK(worst <= 1e-6 * peak);

  ComplexSpectrogram zero(513, 10);
  for (double v : istft(zero, StftConfig{}, 3500)) REQUIRE(v == 0.0);
  CHECK(istft(zero, StftConfig{}, 100).size() == 100);
  CHECK(istft(zero, StftConfig{}, 5000).size() == 5000);
  CHECK_THROWS_AS(istft(ComplexSpectrogram(100, 3), StftConfig{}, 100), std::invalid_argument);
}

TEST_CASE("istft of a single DC frame") {
  ComplexSpectrogram s(513, 1);
  s.at(0, 0) = 512.0;
  const auto y = istft(s, StftConfig{}, 1024);
  // Inverse DFT of DC 512 is 0.5 per sample; synthesis window w, envelope w^2.
  const auto w = hann_window(1024);
  for (int i = 0; i < 1024; ++i) {
    const double env = w[i] * w[i];
    const double expect = env < kEnvelopeFloor ? 0.0 : 0.5 * w[i] / env;
    REQUIRE(y[i] == doctest::Approx(expect).epsilon(1e-9));
  }
}

TEST_CASE("mel scale and filterbank") {
  CHECK(hz_to_mel(1000.0) == doctest::Approx(999.98553713962).epsilon(1e-12));
  CHECK(std::abs(hz_to_mel(1000.0) - 1000.1) < 0.2);
  CHECK(mel_to_hz(hz_to_mel(3210.0)) == doctest::Approx(3210.0).epsilon(1e-12));

  const auto fb = mel_filterbank();
  REQUIRE(fb.n_mel == 128);
  REQUIRE(fb.n_fft_bins == 513);
  for (int m = 0; m < 128; ++m) {
    double mx = 0, mn = 1;
    for (int b = 0; b < 513; ++b) {
      mx = std::max(mx, fb.weight(m, b));
      mn = std::min(mn, fb.weight(m, b));
    }
    REQUIRE(mx == 1.0);
    REQUIRE(mn == 0.0);
    if (m > 0) REQUIRE(fb.center_hz(m, kSampleRate) > fb.center_hz(m - 1, kSampleRate));
  }
  for (int b = 1; b < 512; ++b) {
    double col = 0;
    for (int m = 0; m < 128; ++m) col += fb.weight(m, b);
    REQUIRE(col > 0.0);
    REQUIRE(col <= 2.0);
  }
  CHECK_THROWS_AS(mel_filterbank(512, 1024, kSampleRate), std::invalid_argument);
}

TEST_CASE("mel projection") {
  const auto fb = mel_filterbank();
  ComplexSpectrogram s(513, 2);
  for (auto v : mel_project(s, fb).values) REQUIRE(v == 0.0);

  for (int k : {3, 100, 400}) {
    ComplexSpectrogram one(513, 1);
    one.at(k, 0) = Complex(0.0, -2.0);
    const auto mel = mel_project(one, fb);
    for (int m = 0; m < 128; ++m) REQUIRE(mel.at(m, 0) == doctest::Approx(2.0 * fb.weight(m, k)));
  }

  const auto x = tone(22400, 1000.0, kSampleRate);
  const auto mel = mel_project(stft(x), fb);
  int best = 0, nearest = 0;
  for (int m = 0; m < 128; ++m) {
    if (mel.at(m, 30) > mel.at(best, 30)) best = m;
    if (std::abs(fb.center_hz(m, kSampleRate) - 1000.0) < std::abs(fb.center_hz(nearest, kSampleRate) - 1000.0))
      nearest = m;
  }
  CHECK(best == nearest);

  // Monotone in magnitudes.
  auto s1 = stft(noise(3500, 4));
  auto s2 = s1;
  for (auto& v : s2.values) v *= 1.5;
  const auto m1 = mel_project(s1, fb), m2 = mel_project(s2, fb);
  for (std::size_t i = 0; i < m1.values.size(); ++i) {
    REQUIRE(m1.values[i] >= 0.0);
    REQUIRE(m2.values[i] >= m1.values[i]);
  }
  CHECK_THROWS_AS(mel_project(ComplexSpectrogram(100, 2), fb), std::invalid_argument);
}

TEST_CASE("mel mask expansion") {
  const auto fb = mel_filterbank();
  const auto ones = mel_mask_expand(BinaryMask(128, 5, 1), fb);
  CHECK(ones.rows == 513);
  for (auto v : ones.values) REQUIRE(v == 1);
  for (auto v : mel_mask_expand(BinaryMask(128, 5, 0), fb).values) REQUIRE(v == 0);

  // Brute-force argmax over filters for every linear bin.
  for (int m : {0, 17, 64, 127}) {
    BinaryMask single(128, 1, 0);
    single.at(m, 0) = 1;
    const auto lin = mel_mask_expand(single, fb);
    for (int b = 0; b < 513; ++b) {
      int arg = -1;
      double w = 0;
      for (int k = 0; k < 128; ++k)
        if (fb.weight(k, b) > w) w = fb.weight(k, b), arg = k;
      if (arg < 0) continue;  // bins outside every filter use the nearest center
      REQUIRE(lin.at(b, 0) == (arg == m ? 1 : 0));
    }
  }
  CHECK_THROWS_AS(mel_mask_expand(BinaryMask(64, 5, 1), fb), std::invalid_argument);
}

TEST_CASE("apply_mask zeroes masked bins") {
  auto s = stft(noise(1400, 9));
  BinaryMask m(513, s.time_bins, 1);
  m.at(40, 1) = 0;
  const auto before = s.at(41, 1);
  apply_mask(s, m);
  CHECK(s.at(40, 1) == Complex(0.0, 0.0));
  CHECK(s.at(41, 1) == before);
  CHECK_THROWS_AS(apply_mask(s, BinaryMask(513, s.time_bins + 1, 1)), std::invalid_argument);
}

TEST_CASE("decimator") {
  CHECK(decimate_by_2(std::vector<double>(180, 0.0)).size() == 90);
  CHECK_THROWS_AS(decimate_by_2(std::vector<double>(181, 0.0)), std::invalid_argument);

  const auto taps = decimator_taps();
  REQUIRE(taps.size() == 31);
  double dc = 0;
  for (int k = 0; k < 31; ++k) {
    dc += taps[k];
    REQUIRE(taps[k] == taps[30 - k]);
  }
  CHECK(dc == doctest::Approx(1.0).epsilon(1e-12));
  const auto y = decimate_by_2(std::vector<double>(400, 1.0));
  for (std::size_t i = 10; i < 190; ++i) REQUIRE(y[i] == doctest::Approx(1.0).epsilon(1e-12));

  // Stop band from the decimated Nyquist upward.
  const double fs = kCaptureRate;
  for (double hz : {7900.0, 9000.0, 11000.0, 14000.0, 15500.0}) {
    const auto x = tone(31250, hz, fs);
    const auto d = decimate_by_2(x);
    const std::span<const double> inner(d.data() + 100, d.size() - 200);
    const double atten = 20 * std::log10(rms(inner) / rms(x));
    INFO(hz);
    CHECK(atten <= -40.0);
  }
  // Pass band: no gain, lines up with the input.
  for (double hz : {200.0, 1000.0, 4000.0}) {
    const auto x = tone(31250, hz, fs);
    const auto d = decimate_by_2(x);
    const std::span<const double> inner(d.data() + 100, d.size() - 200);
    CHECK(rms(inner) <= 1.01 * rms(x));
    CHECK(rms(inner) >= 0.99 * rms(x));
    for (std::size_t i = 100; i < 200; ++i) REQUIRE(std::abs(d[i] - x[2 * i]) < 0.01);
  }

  const auto st = decimate_by_2(WaveBuffer::stereo(std::vector<double>(180, 0.5), std::vector<double>(180, -0.5),
                                                   kCaptureRate));
  CHECK(st.sample_rate == kSampleRate);
  CHECK(st.length() == 90);
}
