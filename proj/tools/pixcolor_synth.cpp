// Writes a procedural PNG corpus for desk-scale experiments.
#include <iostream>

#include "CLI11.hpp"

#include "pixcolor/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Procedural scene corpus generator", "pixcolor-synth"};
  pixcolor::CorpusSpec spec;
  std::string dir;
  app.add_option("dir", dir, "output directory")->required();
  app.add_option("--count", spec.count, "number of images")->capture_default_str();
  app.add_option("--width", spec.width, "image width")->capture_default_str();
  app.add_option("--height", spec.height, "image height")->capture_default_str();
  app.add_option("--gray-every", spec.gray_every, "store every n-th image as grey (0: never)")
      ->capture_default_str();
  app.add_option("--seed", spec.seed, "corpus seed")->capture_default_str();
  app.add_option("--prefix", spec.prefix, "file name prefix")->capture_default_str();
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    const auto paths = pixcolor::write_synthetic_corpus(dir, spec);
    std::cout << "wrote " << paths.size() << " images to " << dir << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
