#pragma once

#include <optional>
#include <string>
#include <vector>

#include "crumble/core/types.hpp"

namespace crumble::lob {

struct BookSnapshot {
  TimeNs ts = 0;
  std::optional<PriceCents> bid;
  std::optional<PriceCents> ask;
  Qty d1_bid = 0;
  Qty d1_ask = 0;
  std::vector<Qty> bid_ladder;  // depth per tick away from best bid
  std::vector<Qty> ask_ladder;
};

struct RegimeRecord {
  TimeNs ts = 0;
  double beta = 0.5;
  std::string driver;  // "bernoulli" | "hawkes"
  bool switched = false;
};

// Message log: JSONL (one message per line) and an equivalent columnar CSV;
// both round-trip losslessly.
void write_messages_jsonl(const std::string& path, const std::vector<MarketMessage>& log);
std::vector<MarketMessage> read_messages_jsonl(const std::string& path);
void write_messages_csv(const std::string& path, const std::vector<MarketMessage>& log);
std::vector<MarketMessage> read_messages_csv(const std::string& path);

void write_snapshots_csv(const std::string& path, const std::vector<BookSnapshot>& snaps);
std::vector<BookSnapshot> read_snapshots_csv(const std::string& path);

void write_regime_csv(const std::string& path, const std::vector<RegimeRecord>& trace);
std::vector<RegimeRecord> read_regime_csv(const std::string& path);

}  // namespace crumble::lob
