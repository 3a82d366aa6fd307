#include "pr/types.hpp"

#include <cmath>

namespace pr {

void validate_signal(const Signal& s) {
  if (s.samples.size() == 0) {
    throw ValidationError("signal is empty");
  }
  if (!s.samples.allFinite()) {
    throw ValidationError("signal contains non-finite samples");
  }
  if (s.sample_rate <= 0) {
    throw ValidationError("signal sample rate must be positive");
  }
}

void StftConfig::validate() const {
  if (window_length < 2 || window_length % 2 != 0) {
    throw ValidationError("window_length must be a positive even integer, got " +
                          std::to_string(window_length));
  }
  if (hop != window_length / 2) {
    throw ValidationError("hop must equal window_length / 2 (50% overlap), got hop=" +
                          std::to_string(hop) + " for window_length=" +
                          std::to_string(window_length));
  }
}

SpecShape spec_shape(const StftConfig& cfg, long signal_length) {
  cfg.validate();
  if (signal_length <= 0) {
    throw ValidationError("signal length must be positive");
  }
  // Padded length  L + window; frames cover it with a zero-filled tail.
  const long hop = cfg.hop;
  const int frames = static_cast<int>((signal_length + hop - 1) / hop) + 1;
  return SpecShape{cfg.window_length, frames};
}

CVec Spectrogram::flat() const {
  return Eigen::Map<const CVec>(coeffs.data(), coeffs.size());
}

Spectrogram unflatten(const CVec& flat, const StftConfig& cfg,
                      long signal_length, int sample_rate) {
  const SpecShape shape = spec_shape(cfg, signal_length);
  if (flat.size() != shape.flat_size()) {
    throw ValidationError("flattened spectrogram has size " +
                          std::to_string(flat.size()) + ", expected " +
                          std::to_string(shape.flat_size()));
  }
  Spectrogram out;
  out.coeffs = Eigen::Map<const CMat>(flat.data(), shape.bins, shape.frames);
  out.config = cfg;
  out.signal_length = signal_length;
  out.sample_rate = sample_rate;
  return out;
}

}  // namespace pr
