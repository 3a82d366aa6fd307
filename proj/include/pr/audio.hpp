#pragma once

#include <string>

#include "pr/types.hpp"

namespace pr {

// Reads a mono RIFF/WAVE file: PCM 16-bit or IEEE-float 32-bit. Multichannel
// input keeps the first channel and, when `warning` is given, records a
// note there. Samples are scaled to [-1, 1]. Malformed files raise
// ValidationError naming the byte offset.
Signal load_wav(const std::string& path, std::string* warning = nullptr);

// Writes a mono IEEE-float 32-bit WAV.
void save_wav(const std::string& path, const Signal& signal);

// Windowed-sinc resampler (Blackman window, 32 zero crossings). An explicit
// opt-in utility: nothing in the toolkit resamples silently.
Signal resample(const Signal& in, int target_rate);

}  // namespace pr
