#include "testutil.hpp"

namespace prtest {

Signal random_signal(std::uint64_t seed, long length, int rate) {
  Rng rng(seed);
  return Signal{rng.normals(length), rate};
}

std::filesystem::path temp_dir(const std::string& tag) {
  const auto dir = std::filesystem::path("test_tmp") / tag;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace prtest
