#include "pr/transforms.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <vector>

namespace pr {

namespace {

// The FFTW planner is not thread-safe; plan creation/destruction is
// serialized globally. Execution through the new-array interface is safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

Vec make_sine_window(int length) {
  if (length < 2 || length % 2 != 0) {
    throw ValidationError("sine window length must be even and >= 2, got " +
                          std::to_string(length));
  }
  Vec w(length);
  for (int n = 0; n < length; ++n) {
    w[n] = std::sin(M_PI * (n + 0.5) / length);
  }
  return w;
}

struct StftOperator::Plans {
  fftw_plan fwd = nullptr;
  fftw_plan bwd = nullptr;

  Plans(int n) {
    std::scoped_lock lock(planner_mutex());
    std::vector<fftw_complex> a(n), b(n);
    // FFTW_UNALIGNED lets the new-array execute run on arbitrary buffers.
    fwd = fftw_plan_dft_1d(n, a.data(), b.data(), FFTW_FORWARD,
                           FFTW_ESTIMATE | FFTW_UNALIGNED);
    bwd = fftw_plan_dft_1d(n, a.data(), b.data(), FFTW_BACKWARD,
                           FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  ~Plans() {
    std::scoped_lock lock(planner_mutex());
    if (fwd) fftw_destroy_plan(fwd);
    if (bwd) fftw_destroy_plan(bwd);
  }
};

StftOperator::StftOperator(const StftConfig& cfg, long signal_length,
                           int sample_rate)
    : cfg_(cfg),
      length_(signal_length),
      rate_(sample_rate),
      shape_(spec_shape(cfg, signal_length)),
      window_(make_sine_window(cfg.window_length)),
      plans_(std::make_unique<Plans>(cfg.window_length)) {}

StftOperator::~StftOperator() = default;

CVec StftOperator::forward(const Vec& x) const {
  if (x.size() != length_) {
    throw ValidationError("stft input length " + std::to_string(x.size()) +
                          " does not match operator length " +
                          std::to_string(length_));
  }
  const int W = cfg_.window_length;
  const int H = cfg_.hop;
  const double scale = 1.0 / std::sqrt(static_cast<double>(W));

  CVec out(shape_.flat_size());
  std::vector<Cplx> frame(W), spec(W);
  for (int m = 0; m < shape_.frames; ++m) {
    const long start = static_cast<long>(m) * H - H;  // padded by H on the left
    for (int n = 0; n < W; ++n) {
      const long idx = start + n;
      const double v = (idx >= 0 && idx < length_) ? x[idx] : 0.0;
      frame[n] = v * window_[n];
    }
    fftw_execute_dft(plans_->fwd, reinterpret_cast<fftw_complex*>(frame.data()),
                     reinterpret_cast<fftw_complex*>(spec.data()));
    for (int f = 0; f < W; ++f) {
      out[static_cast<long>(m) * W + f] = spec[f] * scale;
    }
  }
  return out;
}

Vec StftOperator::adjoint(const CVec& s) const {
  if (s.size() != shape_.flat_size()) {
    throw ValidationError("istft input size " + std::to_string(s.size()) +
                          " does not match spectrogram size " +
                          std::to_string(shape_.flat_size()));
  }
  const int W = cfg_.window_length;
  const int H = cfg_.hop;
  const double scale = 1.0 / std::sqrt(static_cast<double>(W));

  Vec x = Vec::Zero(length_);
  std::vector<Cplx> spec(W), frame(W);
  for (int m = 0; m < shape_.frames; ++m) {
    for (int f = 0; f < W; ++f) {
      spec[f] = s[static_cast<long>(m) * W + f] * scale;
    }
    fftw_execute_dft(plans_->bwd, reinterpret_cast<fftw_complex*>(spec.data()),
                     reinterpret_cast<fftw_complex*>(frame.data()));
    const long start = static_cast<long>(m) * H - H;
    for (int n = 0; n < W; ++n) {
      const long idx = start + n;
      if (idx >= 0 && idx < length_) {
        x[idx] += frame[n].real() * window_[n];
      }
    }
  }
  return x;
}

Vec StftOperator::magnitudes(const Vec& x) const {
  return forward(x).cwiseAbs();
}

Spectrogram stft(const Signal& signal, const StftConfig& cfg) {
  validate_signal(signal);
  StftOperator op(cfg, signal.length(), signal.sample_rate);
  const CVec flat = op.forward(signal.samples);
  Spectrogram out;
  out.coeffs = Eigen::Map<const CMat>(flat.data(), op.shape().bins,
                                      op.shape().frames);
  out.config = cfg;
  out.signal_length = signal.length();
  out.sample_rate = signal.sample_rate;
  return out;
}

Signal istft(const Spectrogram& spec) {
  const SpecShape shape = spec_shape(spec.config, spec.signal_length);
  if (spec.coeffs.rows() != shape.bins || spec.coeffs.cols() != shape.frames) {
    throw ValidationError("spectrogram is " + std::to_string(spec.coeffs.rows()) +
                          "x" + std::to_string(spec.coeffs.cols()) +
                          " but its config implies " + std::to_string(shape.bins) +
                          "x" + std::to_string(shape.frames));
  }
  StftOperator op(spec.config, spec.signal_length, spec.sample_rate);
  return Signal{op.adjoint(spec.flat()), spec.sample_rate};
}

Measurements measure(const Signal& signal, const StftConfig& cfg) {
  validate_signal(signal);
  StftOperator op(cfg, signal.length(), signal.sample_rate);
  return Measurements{op.magnitudes(signal.samples)};
}

}  // namespace pr
