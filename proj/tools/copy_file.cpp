// Identity adapter for the external-model protocol: copies the input file to
// the output file unchanged. Used by tests as "selfvocab-copy {in} {out}".

#include <cstdio>
#include <filesystem>
#include <iostream>

int main(int argc, char **argv) {
  if (argc != 3) {
    std::cerr << "usage: selfvocab-copy <input> <output>\n";
    return 2;
  }
  std::error_code ec;
  std::filesystem::copy_file(argv[1], argv[2],
                             std::filesystem::copy_options::overwrite_existing, ec);
  if (ec) {
    std::cerr << "copy failed: " << ec.message() << "\n";
    return 1;
  }
  return 0;
}
