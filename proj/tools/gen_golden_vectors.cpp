// Writes the golden-vector corpus (one JSON object per line) to the path
// given on the command line, or to standard output.
#include "golden_corpus.hpp"

#include <fstream>
#include <iostream>

int main(int argc, char **argv) {
  std::ofstream file;
  if (argc > 1) {
    file.open(argv[1], std::ios::binary);
    if (!file) {
      std::cerr << "gen_golden_vectors: cannot write " << argv[1] << "\n";
      return 3;
    }
  }
  std::ostream &out = argc > 1 ? file : std::cout;
  for (const auto &line : esic::testsupport::golden_corpus())
    out << line << "\n";
  return out ? 0 : 3;
}
