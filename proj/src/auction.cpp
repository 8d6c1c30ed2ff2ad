#include "lemsim/auction.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lemsim/common.hpp"

namespace lemsim {

double ClearingOutcome::total_matched_volume() const {
  double v = 0;
  for (const auto& t : trades) v += t.matched_quantity;
  return v;
}

SortedBooks sort_books(const std::vector<Order>& orders, const BiddingBounds& bounds) {
  SortedBooks books;
  for (const Order& o : orders) {
    if (o.quantity == 0.0 || !std::isfinite(o.quantity))
      throw DataError("order from prosumer_" + std::to_string(o.owner) +
                      " has zero or non-finite quantity");
    if (!(o.price >= bounds.p_min && o.price <= bounds.p_max))
      throw DataError("order price " + std::to_string(o.price) + " from prosumer_" +
                      std::to_string(o.owner) + " outside [" + std::to_string(bounds.p_min) +
                      "," + std::to_string(bounds.p_max) + "]");
    Order q = o;
    q.price = quantize_price(q.price);
    (q.quantity < 0 ? books.bids : books.offers).push_back(q);
  }
  std::stable_sort(books.bids.begin(), books.bids.end(),
                   [](const Order& a, const Order& b) { return a.price > b.price; });
  std::stable_sort(books.offers.begin(), books.offers.end(),
                   [](const Order& a, const Order& b) { return a.price < b.price; });
  return books;
}

std::optional<RoundTrade> match_round(SortedBooks& books) {
  for (size_t i = 1; i < books.bids.size(); ++i)
    if (books.bids[i - 1].price < books.bids[i].price)
      throw NumericalError("bid book lost its ordering");
  for (size_t i = 1; i < books.offers.size(); ++i)
    if (books.offers[i - 1].price > books.offers[i].price)
      throw NumericalError("offer book lost its ordering");

  if (books.bids.empty() || books.offers.empty()) return std::nullopt;
  const double best_bid = books.bids.front().price;
  const double best_offer = books.offers.front().price;
  if (best_bid < best_offer) return std::nullopt;

  // Equal-price tiers at the top of each book. Quantized prices compare
  // exactly, so the tier is a contiguous prefix.
  size_t n_bid_tier = 0;
  while (n_bid_tier < books.bids.size() && books.bids[n_bid_tier].price == best_bid)
    ++n_bid_tier;
  size_t n_offer_tier = 0;
  while (n_offer_tier < books.offers.size() && books.offers[n_offer_tier].price == best_offer)
    ++n_offer_tier;

  double total_demand = 0;  // Q_TD, positive
  for (size_t i = 0; i < n_bid_tier; ++i) total_demand += -books.bids[i].quantity;
  double total_supply = 0;  // Q_TS
  for (size_t j = 0; j < n_offer_tier; ++j) total_supply += books.offers[j].quantity;

  RoundTrade trade;
  trade.round = books.round;
  trade.matched_quantity = std::min(total_demand, total_supply);
  trade.clearing_price = (best_bid + best_offer) / 2.0;

  for (size_t i = 0; i < n_bid_tier; ++i) {
    Order& b = books.bids[i];
    double share = -b.quantity / total_demand;
    double fill = share * trade.matched_quantity;
    trade.buyer_fills[b.owner] += fill;
    trade.buyer_payments[b.owner] += fill * trade.clearing_price;
    b.quantity += fill;
  }
  for (size_t j = 0; j < n_offer_tier; ++j) {
    Order& o = books.offers[j];
    double share = o.quantity / total_supply;
    double fill = share * trade.matched_quantity;
    trade.seller_fills[o.owner] += fill;
    trade.seller_revenues[o.owner] += fill * trade.clearing_price;
    o.quantity -= fill;
  }

  auto cleared = [](const Order& o) { return std::abs(o.quantity) <= kQuantityEps; };
  books.bids.erase(std::remove_if(books.bids.begin(), books.bids.begin() + n_bid_tier, cleared),
                   books.bids.begin() + n_bid_tier);
  books.offers.erase(
      std::remove_if(books.offers.begin(), books.offers.begin() + n_offer_tier, cleared),
      books.offers.begin() + n_offer_tier);

  ++books.round;
  return trade;
}

ClearingOutcome clear_p2p(const std::vector<Order>& orders, const BiddingBounds& bounds) {
  SortedBooks books = sort_books(orders, bounds);
  const int max_rounds = static_cast<int>(books.bids.size() + books.offers.size());

  ClearingOutcome out;
  std::map<int, double> original;  // per-owner signed total
  for (const Order& o : orders) {
    auto [it, inserted] = original.try_emplace(o.owner, o.quantity);
    if (!inserted) {
      if ((it->second < 0) != (o.quantity < 0))
        throw DataError("prosumer_" + std::to_string(o.owner) +
                        " appears as both buyer and seller in one hour");
      it->second += o.quantity;
    }
    if (o.quantity < 0) {
      out.pa[o.owner] = 0;
      out.residual_buy[o.owner] = 0;
    } else {
      out.rv[o.owner] = 0;
      out.residual_sell[o.owner] = 0;
    }
  }

  while (auto trade = match_round(books)) {
    if (books.round > max_rounds)
      throw NumericalError("matching failed to terminate within bid+offer rounds");
    for (const auto& [owner, fill] : trade->buyer_fills) {
      (void)fill;
      out.pa[owner] += trade->buyer_payments.at(owner);
    }
    for (const auto& [owner, fill] : trade->seller_fills) {
      (void)fill;
      out.rv[owner] += trade->seller_revenues.at(owner);
    }
    out.trades.push_back(std::move(*trade));
  }

  // Residuals are whatever survived in the books; matched is derived as
  // |original| - |residual| so the per-participant bookkeeping is exact.
  for (const Order& o : books.bids) out.residual_buy.at(o.owner) += o.quantity;
  for (const Order& o : books.offers) out.residual_sell.at(o.owner) += o.quantity;
  for (const auto& [owner, total] : original) {
    double residual =
        (total < 0) ? out.residual_buy.at(owner) : out.residual_sell.at(owner);
    out.matched[owner] = std::abs(total) - std::abs(residual);
    out.unmatched[owner] = residual;
  }
  return out;
}

}  // namespace lemsim
