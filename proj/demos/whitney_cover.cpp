// Whitney cover of a named set: prints cube counts per level and writes
// cover.csv and cover.svg.
//
//   demo_whitney_cover [square|disc|square_minus_disc|two_rectangles] [max_level]

#include <fstream>
#include <iostream>
#include <map>

#include "vws/vws.hpp"

int main(int argc, char** argv) {
  try {
    const std::string name = argc > 1 ? argv[1] : "square_minus_disc";
    const int level = argc > 2 ? std::stoi(argv[2]) : 7;
    const vws::MaskPtr mask = vws::named_mask(name);
    const vws::WhitneyCover cover = vws::whitney_decompose(*mask, level);

    std::map<int, std::size_t> per_level;
    std::size_t most = 0;
    for (std::size_t i = 0; i < cover.size(); ++i) {
      ++per_level[cover.cube(i).level];
      most = std::max(most, cover.neighbors(i).size());
    }
    std::cout << mask->describe() << ": " << cover.size() << " cubes, " << cover.frontier().size()
              << " frontier cubes, at most " << most << " neighbours (bound " << vws::neighbor_bound(cover.dim()) << ")\n";
    for (const auto& [lv, count] : per_level) std::cout << "  level " << lv << ": " << count << "\n";

    const vws::PartitionOfUnity pou(cover);
    if (!cover.empty()) {
      const vws::Box b = cover.cube(0).box();
      vws::Point x{};
      for (int a = 0; a < cover.dim(); ++a) x[a] = 0.5 * (b.lo[a] + b.hi[a]);
      double sum = 0.0;
      for (auto [i, v] : pou.evaluate(x)) sum += v;
      std::cout << "partition of unity at the first cube centre: sum " << sum << "\n";
    }

    std::ofstream csv("cover.csv"), svg("cover.svg");
    vws::write_cover_csv(csv, cover);
    vws::write_cover_svg(svg, cover);
    std::cout << "wrote cover.csv, cover.svg\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
