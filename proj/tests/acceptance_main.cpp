// Runs the full acceptance suite at desk scale and prints one line per
// criterion.  Exit 0 iff everything passed.
#include <cstdio>
#include <cstdlib>
#include <string>

#include "dhom/acceptance.hpp"

int main(int argc, char** argv) {
  dhom::AcceptanceOptions opts;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      const std::string list = argv[++i];
      std::size_t pos = 0;
      while (pos < list.size()) {
        opts.only.push_back(std::atoi(list.c_str() + pos));
        const std::size_t c = list.find(',', pos);
        if (c == std::string::npos) break;
        pos = c + 1;
      }
    } else if (a == "--scratch" && i + 1 < argc) {
      opts.scratch_dir = argv[++i];
    } else if (a == "--seed" && i + 1 < argc) {
      opts.seed = std::strtoull(argv[++i], nullptr, 10);
    } else {
      std::fprintf(stderr, "usage: %s [--only 1,2,...] [--scratch dir] [--seed n]\n", argv[0]);
      return 2;
    }
  }
  const dhom::AcceptanceReport rep = dhom::run_acceptance(opts);
  std::fputs(dhom::format_acceptance(rep).c_str(), stdout);
  return rep.all_pass ? 0 : 1;
}
