#include "pr/audio.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace pr {

namespace {

struct ByteReader {
  std::vector<unsigned char> bytes;
  std::string path;

  [[noreturn]] void fail(size_t offset, const std::string& what) const {
    throw ValidationError(path + ": " + what + " at offset " +
                          std::to_string(offset));
  }
  void need(size_t offset, size_t n, const std::string& what) const {
    if (offset + n > bytes.size()) {
      fail(offset, "truncated file while reading " + what);
    }
  }
  std::uint16_t u16(size_t offset) const {
    return static_cast<std::uint16_t>(bytes[offset] | (bytes[offset + 1] << 8));
  }
  std::uint32_t u32(size_t offset) const {
    return static_cast<std::uint32_t>(bytes[offset]) |
           (static_cast<std::uint32_t>(bytes[offset + 1]) << 8) |
           (static_cast<std::uint32_t>(bytes[offset + 2]) << 16) |
           (static_cast<std::uint32_t>(bytes[offset + 3]) << 24);
  }
  bool tag(size_t offset, const char* t) const {
    return std::memcmp(bytes.data() + offset, t, 4) == 0;
  }
};

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;

}  // namespace

Signal load_wav(const std::string& path, std::string* warning) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ValidationError("cannot open WAV file: " + path);
  }
  ByteReader r;
  r.path = path;
  r.bytes.assign(std::istreambuf_iterator<char>(in),
                 std::istreambuf_iterator<char>());

  r.need(0, 12, "RIFF header");
  if (!r.tag(0, "RIFF")) r.fail(0, "missing RIFF tag");
  if (!r.tag(8, "WAVE")) r.fail(8, "missing WAVE tag");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::uint16_t block_align = 0;
  size_t data_offset = 0, data_size = 0;

  size_t pos = 12;
  while (pos + 8 <= r.bytes.size()) {
    const size_t chunk_size = r.u32(pos + 4);
    const size_t body = pos + 8;
    if (r.tag(pos, "fmt ")) {
      r.need(body, 16, "fmt chunk");
      format = r.u16(body);
      channels = r.u16(body + 2);
      rate = r.u32(body + 4);
      block_align = r.u16(body + 12);
      bits = r.u16(body + 14);
      have_fmt = true;
    } else if (r.tag(pos, "data")) {
      r.need(body, chunk_size, "data chunk");
      data_offset = body;
      data_size = chunk_size;
    }
    pos = body + chunk_size + (chunk_size % 2);  // chunks are word-aligned
  }

  if (!have_fmt) r.fail(12, "no fmt chunk");
  if (data_offset == 0) r.fail(12, "no data chunk");
  if (channels < 1) r.fail(data_offset, "zero channels");
  if (rate == 0) r.fail(data_offset, "zero sample rate");

  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32) {
    throw ValidationError(path + ": unsupported encoding (format " +
                          std::to_string(format) + ", " + std::to_string(bits) +
                          " bits); expected PCM 16-bit or IEEE-float 32-bit");
  }
  const size_t bytes_per_sample = bits / 8;
  const size_t stride =
      block_align != 0 ? block_align : bytes_per_sample * channels;
  if (stride < bytes_per_sample * channels) {
    r.fail(data_offset, "block alignment smaller than a sample frame");
  }
  const size_t frames = data_size / stride;
  if (frames == 0) r.fail(data_offset, "empty data chunk");

  if (channels > 1 && warning) {
    *warning = path + ": " + std::to_string(channels) +
               " channels, keeping the first";
  }

  Vec samples(static_cast<long>(frames));
  for (size_t i = 0; i < frames; ++i) {
    const size_t at = data_offset + i * stride;
    if (pcm16) {
      const std::int16_t v = static_cast<std::int16_t>(r.u16(at));
      samples[static_cast<long>(i)] = static_cast<double>(v) / 32768.0;
    } else {
      const std::uint32_t raw = r.u32(at);
      float f;
      std::memcpy(&f, &raw, sizeof f);
      samples[static_cast<long>(i)] = static_cast<double>(f);
    }
  }
  return Signal{std::move(samples), static_cast<int>(rate)};
}

void save_wav(const std::string& path, const Signal& signal) {
  validate_signal(signal);
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ValidationError("cannot open WAV file for writing: " + path);
  }
  const std::uint32_t n = static_cast<std::uint32_t>(signal.length());
  const std::uint32_t data_size = n * 4;
  const std::uint32_t riff_size = 36 + data_size;
  const std::uint32_t rate = static_cast<std::uint32_t>(signal.sample_rate);

  auto put_u16 = [&](std::uint16_t v) {
    const unsigned char b[2] = {static_cast<unsigned char>(v & 0xff),
                                static_cast<unsigned char>(v >> 8)};
    out.write(reinterpret_cast<const char*>(b), 2);
  };
  auto put_u32 = [&](std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                                static_cast<unsigned char>((v >> 8) & 0xff),
                                static_cast<unsigned char>((v >> 16) & 0xff),
                                static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
  };

  out.write("RIFF", 4);
  put_u32(riff_size);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put_u32(16);
  put_u16(kFormatFloat);
  put_u16(1);  // mono
  put_u32(rate);
  put_u32(rate * 4);  // byte rate
  put_u16(4);         // block align
  put_u16(32);        // bits
  out.write("data", 4);
  put_u32(data_size);
  for (long i = 0; i < signal.length(); ++i) {
    const float f = static_cast<float>(signal.samples[i]);
    std::uint32_t raw;
    std::memcpy(&raw, &f, sizeof raw);
    put_u32(raw);
  }
  if (!out) {
    throw std::runtime_error("failed writing WAV file: " + path);
  }
}

Signal resample(const Signal& in, int target_rate) {
  validate_signal(in);
  if (target_rate <= 0) {
    throw std::invalid_argument("resample: target rate must be positive");
  }
  if (target_rate == in.sample_rate) {
    return in;
  }
  const double ratio =
      static_cast<double>(target_rate) / static_cast<double>(in.sample_rate);
  const double cutoff = std::min(1.0, ratio);  // fraction of input Nyquist
  constexpr int kZeros = 32;
  const double half_width = kZeros / cutoff;
  const long out_len = static_cast<long>(std::floor(in.length() * ratio));
  if (out_len < 1) {
    throw ValidationError("resample: input too short for target rate");
  }

  auto blackman = [](double u) {  // u in [-1, 1]
    return 0.42 + 0.5 * std::cos(M_PI * u) + 0.08 * std::cos(2.0 * M_PI * u);
  };
  auto sinc = [](double u) {
    if (u == 0.0) return 1.0;
    const double pu = M_PI * u;
    return std::sin(pu) / pu;
  };

  Vec out(out_len);
  for (long n = 0; n < out_len; ++n) {
    const double t = static_cast<double>(n) / ratio;  // input-sample position
    const long k0 = static_cast<long>(std::ceil(t - half_width));
    const long k1 = static_cast<long>(std::floor(t + half_width));
    double acc = 0.0;
    for (long k = std::max(k0, 0L); k <= std::min(k1, in.length() - 1); ++k) {
      const double u = (t - k) * cutoff;
      acc += in.samples[k] * cutoff * sinc(u) * blackman(u / kZeros);
    }
    out[n] = acc;
  }
  return Signal{std::move(out), target_rate};
}

}  // namespace pr
