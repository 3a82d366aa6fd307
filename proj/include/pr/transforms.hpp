#pragma once

#include <memory>

#include "pr/types.hpp"

namespace pr {

// w[n] = sin(pi (n + 1/2) / length). With 50% overlap the squared copies of
// this window tile to exactly 1, so analysis window == synthesis window and
// the unitary-DFT STFT below is a tight frame. Throws on odd or
// non-positive length.
Vec make_sine_window(int length);

// The measurement operator A for a fixed (config, signal length) pair and
// its adjoint. Signals are zero-padded by hop on both ends before framing,
// the pad is trimmed after overlap-add, and the DFT is unitary, giving
// adjoint(forward(x)) == x to machine precision.
//
// An instance owns its FFT plans; calls on one instance are serialized by
// the caller, distinct instances are independent.
class StftOperator {
 public:
  StftOperator(const StftConfig& cfg, long signal_length,
               int sample_rate = 16000);
  ~StftOperator();
  StftOperator(const StftOperator&) = delete;
  StftOperator& operator=(const StftOperator&) = delete;

  const SpecShape& shape() const { return shape_; }
  const StftConfig& config() const { return cfg_; }
  long signal_length() const { return length_; }
  int sample_rate() const { return rate_; }

  CVec forward(const Vec& x) const;    // A x, flattened
  Vec adjoint(const CVec& s) const;    // Re(A^H s)
  Vec magnitudes(const Vec& x) const;  // |A x|

 private:
  struct Plans;

  StftConfig cfg_;
  long length_ = 0;
  int rate_ = 16000;
  SpecShape shape_;
  Vec window_;
  std::unique_ptr<Plans> plans_;
};

Spectrogram stft(const Signal& signal, const StftConfig& cfg);
Signal istft(const Spectrogram& spec);
Measurements measure(const Signal& signal, const StftConfig& cfg);

}  // namespace pr
