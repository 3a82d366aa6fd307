#pragma once

#include <cstdint>
#include <string>

#include "pr/types.hpp"

namespace pr {

// Deterministic speech-like clip: alternating voiced segments (glottal
// impulse train with a gliding pitch, shaped by three formant resonators)
// and unvoiced bursts (band-passed noise), with syllabic amplitude
// envelopes and short gaps. Peak-normalized to 0.5.
Signal make_speech_like(std::uint64_t seed, double seconds, int sample_rate);

// Writes `count` clips named clip_000.wav ... into dir (created if needed).
void write_speech_corpus(const std::string& dir, int count,
                         std::uint64_t seed, double seconds, int sample_rate);

}  // namespace pr
