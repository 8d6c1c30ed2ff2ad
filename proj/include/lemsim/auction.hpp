#pragma once

#include <map>
#include <optional>
#include <vector>

#include "lemsim/scenario.hpp"

namespace lemsim {

// A single bid (quantity < 0) or offer (quantity > 0). For a bid the price
// is the maximum the buyer will pay; for an offer, the minimum acceptable.
struct Order {
  int owner = 0;      // prosumer id
  double price = 0;   // $/MWh
  double quantity = 0;  // signed MWh
};

// Active books for the multi-round matching loop: bids sorted by
// nonincreasing price, offers by nondecreasing price, both stable within
// equal prices (submission order preserved).
struct SortedBooks {
  std::vector<Order> bids;
  std::vector<Order> offers;
  int round = 0;
};

// Outcome of one matching round: the equal-price tiers on both sides traded
// quantity matched_quantity at the midpoint clearing_price, split
// proportionally to each participant's share of its tier.
struct RoundTrade {
  int round = 0;
  double clearing_price = 0;
  double matched_quantity = 0;
  std::map<int, double> buyer_fills;      // owner -> MWh (positive)
  std::map<int, double> seller_fills;     // owner -> MWh (positive)
  std::map<int, double> buyer_payments;   // owner -> $
  std::map<int, double> seller_revenues;  // owner -> $
};

struct ClearingOutcome {
  std::vector<RoundTrade> trades;
  std::map<int, double> pa;             // buyer -> total payment $
  std::map<int, double> rv;             // seller -> total revenue $
  std::map<int, double> matched;        // owner -> matched magnitude MWh
  std::map<int, double> residual_buy;   // buyer -> leftover quantity (<= 0)
  std::map<int, double> residual_sell;  // seller -> leftover quantity (>= 0)
  std::map<int, double> unmatched;      // owner -> leftover, signed

  double total_matched_volume() const;
};

// Splits and sorts the order list. Throws DataError on a zero-quantity order
// or a price outside [bounds.p_min, bounds.p_max]. Prices are quantized to
// the 1e-6 grid here so equal-price tiers group by exact comparison.
SortedBooks sort_books(const std::vector<Order>& orders, const BiddingBounds& bounds);

// Runs one matching round. Returns the trade and updates the books, removing
// fully cleared entries; returns nullopt (books untouched) when the best bid
// is below the best offer or either side is empty.
std::optional<RoundTrade> match_round(SortedBooks& books);

// Full multi-round clearing of one hour's orders.
ClearingOutcome clear_p2p(const std::vector<Order>& orders, const BiddingBounds& bounds);

}  // namespace lemsim
