#include "pr/rng.hpp"

#include <cmath>

namespace pr {

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double mag = std::sqrt(-2.0 * std::log(u1));
  spare_ = mag * std::sin(2.0 * M_PI * u2);
  has_spare_ = true;
  return mag * std::cos(2.0 * M_PI * u2);
}

Vec Rng::phases(long k) {
  Vec out(k);
  for (long i = 0; i < k; ++i) {
    out[i] = 2.0 * M_PI * uniform();
  }
  return out;
}

Vec Rng::normals(long k) {
  Vec out(k);
  for (long i = 0; i < k; ++i) {
    out[i] = normal();
  }
  return out;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
  // FNV-1a over the label, mixed with the base seed.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(seed ^ splitmix64(h));
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label,
                          std::uint64_t index) {
  return splitmix64(derive_seed(seed, label) ^ splitmix64(index));
}

}  // namespace pr
