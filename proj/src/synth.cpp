#include "pr/synth.hpp"

#include <cmath>
#include <filesystem>

#include "pr/audio.hpp"
#include "pr/rng.hpp"

namespace pr {

namespace {

// Two-pole resonator, unit gain at the resonance frequency.
class Resonator {
 public:
  Resonator(double freq, double bandwidth, int fs) {
    const double r = std::exp(-M_PI * bandwidth / fs);
    const double theta = 2.0 * M_PI * freq / fs;
    a1_ = 2.0 * r * std::cos(theta);
    a2_ = -r * r;
    g_ = (1.0 - r) * std::sqrt(1.0 - 2.0 * r * std::cos(2.0 * theta) + r * r);
  }

  double step(double x) {
    const double y = g_ * x + a1_ * y1_ + a2_ * y2_;
    y2_ = y1_;
    y1_ = y;
    return y;
  }

 private:
  double a1_ = 0.0, a2_ = 0.0, g_ = 1.0;
  double y1_ = 0.0, y2_ = 0.0;
};

double raised_cos_env(double pos, double len, double edge) {
  const double d = std::min(pos, len - pos);
  if (d >= edge) return 1.0;
  if (d <= 0.0) return 0.0;
  return 0.5 - 0.5 * std::cos(M_PI * d / edge);
}

}  // namespace

Signal make_speech_like(std::uint64_t seed, double seconds, int sample_rate) {
  if (seconds <= 0.0 || sample_rate <= 0) {
    throw std::invalid_argument("make_speech_like: need positive duration and rate");
  }
  Rng rng(seed);
  const int fs = sample_rate;
  const long total = static_cast<long>(seconds * fs);
  Vec out = Vec::Zero(total);

  const double nyquist = fs / 2.0;
  long pos = 0;
  while (pos < total) {
    const double pick = rng.uniform();
    if (pick < 0.62) {
      // Voiced segment with a pitch glide and three formants.
      const long len = static_cast<long>(rng.uniform(0.12, 0.28) * fs);
      const double f0a = rng.uniform(90.0, 250.0);
      const double f0b = f0a * rng.uniform(0.8, 1.25);
      Resonator f1(rng.uniform(300.0, 900.0), rng.uniform(60.0, 150.0), fs);
      Resonator f2(std::min(rng.uniform(900.0, 2200.0), 0.45 * nyquist),
                   rng.uniform(80.0, 200.0), fs);
      Resonator f3(std::min(rng.uniform(2200.0, 3400.0), 0.45 * nyquist),
                   rng.uniform(100.0, 250.0), fs);
      const double amp = rng.uniform(0.5, 1.0);
      double phase = rng.uniform();
      for (long i = 0; i < len && pos + i < total; ++i) {
        const double frac = static_cast<double>(i) / len;
        const double f0 = f0a + (f0b - f0a) * frac;
        phase += f0 / fs;
        double exc = 0.0;
        if (phase >= 1.0) {
          phase -= 1.0;
          exc = 1.0 + 0.05 * rng.normal();  // glottal pulse with shimmer
        }
        exc += 0.01 * rng.normal();  // aspiration noise
        const double v = f1.step(exc) + 0.6 * f2.step(exc) + 0.35 * f3.step(exc);
        out[pos + i] += amp * v * raised_cos_env(i, len, 0.015 * fs);
      }
      pos += len;
    } else if (pick < 0.85) {
      // Unvoiced burst: band-passed noise.
      const long len = static_cast<long>(rng.uniform(0.06, 0.15) * fs);
      Resonator band(std::min(rng.uniform(1500.0, 4500.0), 0.45 * nyquist),
                     rng.uniform(400.0, 900.0), fs);
      const double amp = rng.uniform(0.15, 0.4);
      for (long i = 0; i < len && pos + i < total; ++i) {
        const double v = band.step(rng.normal());
        out[pos + i] += amp * v * raised_cos_env(i, len, 0.01 * fs);
      }
      pos += len;
    } else {
      // Short gap.
      pos += static_cast<long>(rng.uniform(0.02, 0.06) * fs);
    }
  }

  const double peak = out.cwiseAbs().maxCoeff();
  if (peak > 0.0) {
    out *= 0.5 / peak;
  }
  return Signal{std::move(out), fs};
}

void write_speech_corpus(const std::string& dir, int count, std::uint64_t seed,
                         double seconds, int sample_rate) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) {
    throw ValidationError("cannot create corpus directory " + dir + ": " +
                          ec.message());
  }
  for (int i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "clip_%03d.wav", i);
    const Signal s =
        make_speech_like(derive_seed(seed, "clip", i), seconds, sample_rate);
    save_wav((fs::path(dir) / name).string(), s);
  }
}

}  // namespace pr
