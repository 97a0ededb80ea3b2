#include "crumble/lob/io.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace crumble::lob {

namespace {

[[noreturn]] void fail(const std::string& what) { throw std::runtime_error(what); }

std::FILE* open_write(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) fail("cannot open for write: " + path);
  return f;
}

// Minimal field scanner for our own fixed-layout JSONL lines.
bool find_int(const std::string& line, const char* key, std::int64_t& out) {
  const auto pos = line.find(key);
  if (pos == std::string::npos) return false;
  const char* p = line.data() + pos + std::strlen(key);
  auto [ptr, ec] = std::from_chars(p, line.data() + line.size(), out);
  return ec == std::errc();
}

std::string find_str(const std::string& line, const char* key) {
  const auto pos = line.find(key);
  if (pos == std::string::npos) return {};
  const auto start = pos + std::strlen(key);
  const auto end = line.find('"', start);
  return line.substr(start, end - start);
}

// Round-trip double formatting for CSV.
void append_double(std::string& out, double v) {
  char buf[40];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  out.append(buf, static_cast<std::size_t>(n));
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::int64_t to_i64(const std::string& s) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc()) fail("bad integer field: " + s);
  return v;
}

}  // namespace

void write_messages_jsonl(const std::string& path, const std::vector<MarketMessage>& log) {
  std::FILE* f = open_write(path);
  for (const auto& m : log) {
    if (m.kind == MsgKind::MarketOrder) {
      std::fprintf(f, "{\"ts\":%" PRId64 ",\"kind\":\"%s\",\"side\":\"%s\",\"qty\":%" PRId64
                      ",\"id\":%" PRIu64 ",\"agent\":%d}\n",
                   m.timestamp, kind_name(m.kind), side_name(m.side), m.quantity, m.order_id,
                   m.agent_id);
    } else {
      std::fprintf(f, "{\"ts\":%" PRId64 ",\"kind\":\"%s\",\"side\":\"%s\",\"price\":%" PRId64
                      ",\"qty\":%" PRId64 ",\"id\":%" PRIu64 ",\"agent\":%d}\n",
                   m.timestamp, kind_name(m.kind), side_name(m.side), m.price, m.quantity,
                   m.order_id, m.agent_id);
    }
  }
  std::fclose(f);
}

std::vector<MarketMessage> read_messages_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open: " + path);
  std::vector<MarketMessage> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    MarketMessage m;
    std::int64_t v = 0;
    if (!find_int(line, "\"ts\":", v)) fail("missing ts: " + line);
    m.timestamp = v;
    const auto kind = kind_from_name(find_str(line, "\"kind\":\""));
    const auto side = side_from_name(find_str(line, "\"side\":\""));
    if (!kind || !side) fail("bad kind/side: " + line);
    m.kind = *kind;
    m.side = *side;
    if (find_int(line, "\"price\":", v)) m.price = v;
    if (!find_int(line, "\"qty\":", v)) fail("missing qty: " + line);
    m.quantity = v;
    if (!find_int(line, "\"id\":", v)) fail("missing id: " + line);
    m.order_id = static_cast<OrderId>(v);
    if (!find_int(line, "\"agent\":", v)) fail("missing agent: " + line);
    m.agent_id = static_cast<AgentId>(v);
    out.push_back(m);
  }
  return out;
}

void write_messages_csv(const std::string& path, const std::vector<MarketMessage>& log) {
  std::FILE* f = open_write(path);
  std::fprintf(f, "ts,kind,side,price,qty,id,agent\n");
  for (const auto& m : log) {
    if (m.kind == MsgKind::MarketOrder) {
      std::fprintf(f, "%" PRId64 ",%s,%s,,%" PRId64 ",%" PRIu64 ",%d\n", m.timestamp,
                   kind_name(m.kind), side_name(m.side), m.quantity, m.order_id, m.agent_id);
    } else {
      std::fprintf(f, "%" PRId64 ",%s,%s,%" PRId64 ",%" PRId64 ",%" PRIu64 ",%d\n", m.timestamp,
                   kind_name(m.kind), side_name(m.side), m.price, m.quantity, m.order_id,
                   m.agent_id);
    }
  }
  std::fclose(f);
}

std::vector<MarketMessage> read_messages_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open: " + path);
  std::vector<MarketMessage> out;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 7) fail("bad csv row: " + line);
    MarketMessage m;
    m.timestamp = to_i64(f[0]);
    const auto kind = kind_from_name(f[1]);
    const auto side = side_from_name(f[2]);
    if (!kind || !side) fail("bad kind/side: " + line);
    m.kind = *kind;
    m.side = *side;
    m.price = f[3].empty() ? 0 : to_i64(f[3]);
    m.quantity = to_i64(f[4]);
    m.order_id = static_cast<OrderId>(to_i64(f[5]));
    m.agent_id = static_cast<AgentId>(to_i64(f[6]));
    out.push_back(m);
  }
  return out;
}

void write_snapshots_csv(const std::string& path, const std::vector<BookSnapshot>& snaps) {
  std::FILE* f = open_write(path);
  const std::size_t levels = snaps.empty() ? 0 : snaps.front().bid_ladder.size();
  std::string header = "ts,bid,ask,d1_bid,d1_ask";
  for (std::size_t k = 0; k < levels; ++k) header += ",bid_l" + std::to_string(k);
  for (std::size_t k = 0; k < levels; ++k) header += ",ask_l" + std::to_string(k);
  std::fprintf(f, "%s\n", header.c_str());
  std::string row;
  for (const auto& s : snaps) {
    row.clear();
    row += std::to_string(s.ts);
    row += ',';
    if (s.bid) row += std::to_string(*s.bid);
    row += ',';
    if (s.ask) row += std::to_string(*s.ask);
    row += ',';
    row += std::to_string(s.d1_bid);
    row += ',';
    row += std::to_string(s.d1_ask);
    for (const auto q : s.bid_ladder) {
      row += ',';
      row += std::to_string(q);
    }
    for (const auto q : s.ask_ladder) {
      row += ',';
      row += std::to_string(q);
    }
    row += '\n';
    std::fwrite(row.data(), 1, row.size(), f);
  }
  std::fclose(f);
}

std::vector<BookSnapshot> read_snapshots_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open: " + path);
  std::vector<BookSnapshot> out;
  std::string line;
  std::getline(in, line);  // header
  const auto header = split_csv(line);
  const std::size_t levels = header.size() > 5 ? (header.size() - 5) / 2 : 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 5 + 2 * levels) fail("bad snapshot row: " + line);
    BookSnapshot s;
    s.ts = to_i64(f[0]);
    if (!f[1].empty()) s.bid = to_i64(f[1]);
    if (!f[2].empty()) s.ask = to_i64(f[2]);
    s.d1_bid = to_i64(f[3]);
    s.d1_ask = to_i64(f[4]);
    s.bid_ladder.resize(levels);
    s.ask_ladder.resize(levels);
    for (std::size_t k = 0; k < levels; ++k) s.bid_ladder[k] = to_i64(f[5 + k]);
    for (std::size_t k = 0; k < levels; ++k) s.ask_ladder[k] = to_i64(f[5 + levels + k]);
    out.push_back(std::move(s));
  }
  return out;
}

void write_regime_csv(const std::string& path, const std::vector<RegimeRecord>& trace) {
  std::FILE* f = open_write(path);
  std::fprintf(f, "ts,beta,driver,switch\n");
  std::string row;
  for (const auto& r : trace) {
    row.clear();
    row += std::to_string(r.ts);
    row += ',';
    append_double(row, r.beta);
    row += ',';
    row += r.driver;
    row += ',';
    row += r.switched ? '1' : '0';
    row += '\n';
    std::fwrite(row.data(), 1, row.size(), f);
  }
  std::fclose(f);
}

std::vector<RegimeRecord> read_regime_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open: " + path);
  std::vector<RegimeRecord> out;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 4) fail("bad regime row: " + line);
    RegimeRecord r;
    r.ts = to_i64(f[0]);
    r.beta = std::strtod(f[1].c_str(), nullptr);
    r.driver = f[2];
    r.switched = f[3] == "1";
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace crumble::lob
