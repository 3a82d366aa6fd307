#include <CLI11.hpp>

#include <iostream>

#include "pr/synth.hpp"

// Generates a toy speech-like corpus for exercising the toolkit without an
// external dataset.
int main(int argc, char** argv) {
  CLI::App app{"write synthetic speech-like WAV clips"};
  std::string out_dir;
  int count = 10;
  double seconds = 1.0;
  int rate = 16000;
  std::uint64_t seed = 1;
  app.add_option("--out", out_dir, "output directory")->required();
  app.add_option("--count", count, "number of clips");
  app.add_option("--seconds", seconds, "clip duration");
  app.add_option("--rate", rate, "sample rate");
  app.add_option("--seed", seed, "base seed");
  CLI11_PARSE(app, argc, argv);

  try {
    pr::write_speech_corpus(out_dir, count, seed, seconds, rate);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  std::cout << "wrote " << count << " clips to " << out_dir << "\n";
  return 0;
}
