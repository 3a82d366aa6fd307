#include "pr/stoi.hpp"

#include <fftw3.h>

#include <cmath>
#include <limits>
#include <mutex>
#include <vector>

#include "pr/audio.hpp"

namespace pr {

namespace {

constexpr int kFs = 10000;        // analysis rate
constexpr int kFrame = 256;       // 25.6 ms
constexpr int kHop = 128;
constexpr int kFft = 512;
constexpr int kBands = 15;
constexpr double kFirstBand = 150.0;
constexpr int kSegment = 30;      // frames per 384 ms segment
constexpr double kDynRange = 40.0;
constexpr double kSdrBound = -15.0;
constexpr double kTiny = 1e-20;

std::vector<double> hann_window() {
  // hanning(kFrame + 2) without its zero endpoints.
  std::vector<double> w(kFrame);
  for (int i = 0; i < kFrame; ++i) {
    w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * (i + 1) / (kFrame + 1));
  }
  return w;
}

using Frames = std::vector<std::vector<double>>;

Frames window_frames(const Vec& x, const std::vector<double>& w) {
  Frames out;
  for (long start = 0; start + kFrame <= x.size(); start += kHop) {
    std::vector<double> f(kFrame);
    for (int i = 0; i < kFrame; ++i) {
      f[i] = x[start + i] * w[i];
    }
    out.push_back(std::move(f));
  }
  return out;
}

// One-third-octave band energies, bands x frames.
std::vector<std::vector<double>> band_energies(const Frames& frames) {
  static std::mutex plan_mutex;
  std::vector<Cplx> in(kFft), out(kFft);
  fftw_plan plan;
  {
    std::scoped_lock lock(plan_mutex);
    plan = fftw_plan_dft_1d(kFft, reinterpret_cast<fftw_complex*>(in.data()),
                            reinterpret_cast<fftw_complex*>(out.data()),
                            FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  }

  // Band edges at cf * 2^(+-1/6) around cf = 150 * 2^(j/3).
  std::vector<std::pair<int, int>> edges(kBands);
  for (int j = 0; j < kBands; ++j) {
    const double cf = kFirstBand * std::pow(2.0, j / 3.0);
    const double lo = cf * std::pow(2.0, -1.0 / 6.0);
    const double hi = cf * std::pow(2.0, 1.0 / 6.0);
    int klo = static_cast<int>(std::ceil(lo * kFft / kFs));
    int khi = static_cast<int>(std::ceil(hi * kFft / kFs));
    klo = std::min(klo, kFft / 2);
    khi = std::min(khi, kFft / 2 + 1);
    edges[j] = {klo, khi};
  }

  std::vector<std::vector<double>> bands(kBands,
                                         std::vector<double>(frames.size()));
  std::vector<Cplx> fin(kFft), fout(kFft);
  for (size_t m = 0; m < frames.size(); ++m) {
    for (int i = 0; i < kFft; ++i) {
      fin[i] = i < kFrame ? Cplx(frames[m][i], 0.0) : Cplx(0.0, 0.0);
    }
    fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(fin.data()),
                     reinterpret_cast<fftw_complex*>(fout.data()));
    for (int j = 0; j < kBands; ++j) {
      double acc = 0.0;
      for (int k = edges[j].first; k < edges[j].second; ++k) {
        acc += std::norm(fout[k]);
      }
      bands[j][m] = std::sqrt(acc);
    }
  }
  {
    std::scoped_lock lock(plan_mutex);
    fftw_destroy_plan(plan);
  }
  return bands;
}

}  // namespace

double stoi(const Signal& reference, const Signal& estimate) {
  validate_signal(reference);
  validate_signal(estimate);
  if (reference.length() != estimate.length() ||
      reference.sample_rate != estimate.sample_rate) {
    throw std::invalid_argument("stoi: signals must share length and rate");
  }

  const Vec x = resample(reference, kFs).samples;
  const Vec y = resample(estimate, kFs).samples;
  if (x.size() < kFrame) {
    throw ValidationError("stoi: input shorter than one analysis frame");
  }

  const std::vector<double> w = hann_window();
  const Frames xf = window_frames(x, w);
  const Frames yf = window_frames(y, w);

  // Silent-frame removal keyed on the reference.
  double max_db = -std::numeric_limits<double>::infinity();
  std::vector<double> energy_db(xf.size());
  for (size_t m = 0; m < xf.size(); ++m) {
    double e = 0.0;
    for (double v : xf[m]) e += v * v;
    energy_db[m] = 20.0 * std::log10(std::sqrt(e) + kTiny);
    max_db = std::max(max_db, energy_db[m]);
  }
  if (!(max_db > 20.0 * std::log10(kTiny))) {
    throw ValidationError("stoi: reference is silent");
  }
  Frames xs, ys;
  for (size_t m = 0; m < xf.size(); ++m) {
    if (energy_db[m] > max_db - kDynRange) {
      xs.push_back(xf[m]);
      ys.push_back(yf[m]);
    }
  }
  if (static_cast<int>(xs.size()) < kSegment) {
    throw ValidationError(
        "stoi: fewer than 384 ms of non-silent content (" +
        std::to_string(xs.size()) + " frames)");
  }

  const auto xb = band_energies(xs);
  const auto yb = band_energies(ys);
  const size_t n_frames = xs.size();

  const double clip = std::pow(10.0, -kSdrBound / 20.0);
  double total = 0.0;
  long count = 0;
  std::vector<double> xseg(kSegment), yseg(kSegment);
  for (size_t m = kSegment; m <= n_frames; ++m) {
    for (int j = 0; j < kBands; ++j) {
      double ex = 0.0, ey = 0.0;
      for (int i = 0; i < kSegment; ++i) {
        xseg[i] = xb[j][m - kSegment + i];
        yseg[i] = yb[j][m - kSegment + i];
        ex += xseg[i] * xseg[i];
        ey += yseg[i] * yseg[i];
      }
      const double alpha = std::sqrt(ex / (ey + kTiny));
      double mx = 0.0, my = 0.0;
      for (int i = 0; i < kSegment; ++i) {
        yseg[i] = std::min(alpha * yseg[i], (1.0 + clip) * xseg[i]);
        mx += xseg[i];
        my += yseg[i];
      }
      mx /= kSegment;
      my /= kSegment;
      double dot = 0.0, nx = 0.0, ny = 0.0;
      for (int i = 0; i < kSegment; ++i) {
        const double a = xseg[i] - mx;
        const double b = yseg[i] - my;
        dot += a * b;
        nx += a * a;
        ny += b * b;
      }
      total += dot / (std::sqrt(nx * ny) + kTiny);
      count += 1;
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace pr
