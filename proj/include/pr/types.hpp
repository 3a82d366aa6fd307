#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace pr {

using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using Cplx = std::complex<double>;

// Lower bound applied to magnitudes before logs, negative powers and
// divisions. Keeps KL/IS generators and the |h| back-propagation finite.
inline constexpr double kDomainFloor = 1e-8;

// Input/configuration problems. The CLI maps these to exit code 1;
// anything else that escapes maps to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Elementwise product of a real vector with a complex vector.
inline CVec cmul(const Vec& a, const CVec& z) {
  return (z.array() * a.array().cast<Cplx>()).matrix();
}

struct Signal {
  Vec samples;
  int sample_rate = 16000;

  long length() const { return static_cast<long>(samples.size()); }
};

// Throws ValidationError on empty or non-finite samples.
void validate_signal(const Signal& s);

// Sine-window STFT framing. Only 50% overlap is supported: the self-dual
// window tiles exactly at hop = window_length / 2.
struct StftConfig {
  int window_length = 1024;
  int hop = 512;

  static StftConfig for_window(int window_length) {
    return StftConfig{window_length, window_length / 2};
  }
  void validate() const;
};

struct SpecShape {
  int bins = 0;  // == window_length; the full complex spectrum is kept
  int frames = 0;

  long flat_size() const { return static_cast<long>(bins) * frames; }
};

SpecShape spec_shape(const StftConfig& cfg, long signal_length);

struct Spectrogram {
  CMat coeffs;  // bins x frames
  StftConfig config;
  long signal_length = 0;
  int sample_rate = 16000;

  // Column-major flattening: frame-contiguous blocks of bins. This is the
  // C^K vector the solvers operate on.
  CVec flat() const;
};

Spectrogram unflatten(const CVec& flat, const StftConfig& cfg,
                      long signal_length, int sample_rate);

// Nonnegative magnitude measurements, same flattened layout as Spectrogram.
struct Measurements {
  Vec r;
};

}  // namespace pr
