#pragma once

#include "pr/types.hpp"

namespace pr {

// Short-term objective intelligibility of `estimate` against the clean
// reference: resample to 10 kHz, drop frames more than 40 dB below the
// loudest reference frame, decompose into 15 one-third-octave bands from
// 150 Hz, and average clipped correlation coefficients over 384 ms
// segments. Roughly in [0, 1], higher is better; reported without clamping.
// Throws ValidationError when less than 384 ms of non-silent content
// remains or the reference is silent.
double stoi(const Signal& reference, const Signal& estimate);

}  // namespace pr
