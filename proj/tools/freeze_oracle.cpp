// Regenerates the frozen radial-oracle fixture used by the regression tests.
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "lelab/radial_oracle.hpp"

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: freeze_oracle <output.json>\n";
    return 2;
  }
  nlohmann::json out = nlohmann::json::array();
  for (double p : {10.0, 20.0, 40.0, 80.0, 160.0}) {
    const auto prof = lelab::radial::shoot_radial(p);
    const auto spec = lelab::radial::radial_spectrum(prof);
    out.push_back({{"p", p},
                   {"u0", prof.u0},
                   {"eps", prof.eps},
                   {"energy", prof.energy},
                   {"merged", spec.merged},
                   {"merged_minus_one", spec.merged_minus_one}});
  }
  std::ofstream(argv[1]) << out.dump(2) << '\n';
}
