#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace crumble {

// Times are integer nanoseconds since session open; prices are integer cents
// on the grid p0 + k (tick size = 1 cent); quantities are integer shares.
using TimeNs = std::int64_t;
using PriceCents = std::int64_t;
using Qty = std::int64_t;
using OrderId = std::uint64_t;
using AgentId = std::int32_t;

inline constexpr TimeNs kNsPerSec = 1'000'000'000;
inline constexpr TimeNs kNsPerMs = 1'000'000;
inline constexpr TimeNs kNsPerUs = 1'000;

inline constexpr double seconds(TimeNs t) { return static_cast<double>(t) / 1e9; }
inline constexpr TimeNs from_seconds(double s) { return static_cast<TimeNs>(s * 1e9); }

enum class Side : std::uint8_t { Bid = 0, Ask = 1 };

inline Side opposite(Side s) { return s == Side::Bid ? Side::Ask : Side::Bid; }
inline const char* side_name(Side s) { return s == Side::Bid ? "bid" : "ask"; }
inline std::optional<Side> side_from_name(const std::string& n) {
  if (n == "bid") return Side::Bid;
  if (n == "ask") return Side::Ask;
  return std::nullopt;
}

// Deterioration sign: +1 on the ask (price up is worse), -1 on the bid.
inline int deterioration_sign(Side s) { return s == Side::Ask ? +1 : -1; }

enum class MsgKind : std::uint8_t { LimitAdd = 0, Cancel = 1, MarketOrder = 2 };

inline const char* kind_name(MsgKind k) {
  switch (k) {
    case MsgKind::LimitAdd: return "add";
    case MsgKind::Cancel: return "cancel";
    case MsgKind::MarketOrder: return "market";
  }
  return "?";
}
inline std::optional<MsgKind> kind_from_name(const std::string& n) {
  if (n == "add") return MsgKind::LimitAdd;
  if (n == "cancel") return MsgKind::Cancel;
  if (n == "market") return MsgKind::MarketOrder;
  return std::nullopt;
}

// The one observable shared by the simulator and every downstream consumer.
// agent_id is simulator bookkeeping; detection code must never read it.
struct MarketMessage {
  TimeNs timestamp = 0;
  MsgKind kind = MsgKind::LimitAdd;
  Side side = Side::Bid;
  PriceCents price = 0;  // ignored for MarketOrder
  Qty quantity = 0;      // for Cancel: ignored (full cancel of the order)
  OrderId order_id = 0;
  AgentId agent_id = 0;

  bool operator==(const MarketMessage&) const = default;
};

}  // namespace crumble
