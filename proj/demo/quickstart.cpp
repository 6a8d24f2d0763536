// Decode one synthetic candidate set with every selector and print the picks.

#include <iostream>

#include "cbmbr/cbmbr.hpp"

int main() {
  const auto inst = cbmbr::gen_diverse(256, 32, 7);
  const auto utility = cbmbr::UtilityFn::mlp(1);

  cbmbr::DecoderConfig cfg;
  cfg.utility = utility;
  cfg.kmeans.k = 16;
  cfg.kmeans.seed = 7;

  for (auto variant : {cbmbr::Variant::Vanilla, cbmbr::Variant::CBMBR, cbmbr::Variant::CBMBRCnt,
                       cbmbr::Variant::MeanAggregate}) {
    cfg.variant = variant;
    const auto result = cbmbr::decode(inst, cfg);
    std::cout << cbmbr::to_string(variant) << ": index " << result.selected_index << ", utility phase "
              << result.phase_timings.at("utility") / 1000 << " us\n";
  }
}
