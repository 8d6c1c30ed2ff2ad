#pragma once

#include "lemsim/report.hpp"
#include "lemsim/scenario.hpp"

namespace lemsim {

// Rule-based reference strategies. Both are deterministic and settle every
// hour with the aggregator always clearing at the realized wholesale price.

// All retail trades go through the aggregator at the maximum markup; there
// is no P2P market. Rewards score each prosumer against maximally
// uncompetitive implied prices (p_min bids, p_max offers), which is what a
// non-participant forfeits.
EpisodeReport rb_agg_run(const MarketScenario& scenario);

enum class UniformPriceMode {
  kSpreadMidpoint,  // midpoint of the max-markup quotes (= F_MP when symmetric)
  kForecast,        // F_MP directly
  kRealized,        // P_w, clamped into the quote corridor
};

// Uniform-price P2P: matched volume = min(total demand, total supply) split
// proportionally on each side at one price; residuals settle with the
// aggregator at max markup. Rewards use the uniform price as every
// participant's implied bid/offer.
EpisodeReport rb_p2p_run(const MarketScenario& scenario,
                         UniformPriceMode mode = UniformPriceMode::kSpreadMidpoint);

}  // namespace lemsim
