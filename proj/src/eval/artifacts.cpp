#include "crumble/eval/artifacts.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace crumble::eval {

using nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& what) { throw std::runtime_error(what); }

std::FILE* open_write(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) fail("cannot open for write: " + path);
  return f;
}

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
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc()) fail("bad integer: " + s);
  return v;
}

double to_f64(const std::string& s) { return std::strtod(s.c_str(), nullptr); }

void append_event_core(std::string& row, const EventRecord& e) {
  row += std::to_string(e.session);
  row += ',';
  row += std::to_string(e.id);
  row += ',';
  row += side_name(e.side);
  row += ',';
  row += std::to_string(e.t0);
  row += ',';
  row += std::to_string(e.t1);
  row += ',';
  row += std::to_string(e.n_steps);
}

}  // namespace

const char* split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

static Split split_from_name(const std::string& n) {
  if (n == "train") return Split::Train;
  if (n == "val") return Split::Val;
  if (n == "test") return Split::Test;
  throw std::invalid_argument("unknown split: " + n);
}

void write_candidates_csv(const std::string& path, const std::vector<EventRecord>& events) {
  std::FILE* f = open_write(path);
  std::fprintf(f,
               "session,id,side,t0,t1,n_steps,f_book,f_eff,f_opp,f_rev,gate,"
               "wd,ds,rr,sr,epd,idk,dt_rec,n_rec,sum_ds,label,target,target_overlap,split\n");
  std::string row;
  for (const auto& e : events) {
    row.clear();
    append_event_core(row, e);
    row += ',';
    row += e.filters.book_consistency ? '1' : '0';
    row += ',';
    row += e.filters.eff_price ? '1' : '0';
    row += ',';
    row += e.filters.opposite_side ? '1' : '0';
    row += ',';
    row += e.filters.transience ? '1' : '0';
    row += ',';
    row += e.gate ? '1' : '0';
    for (const double v : {e.x.walk_depth, e.x.depletion_speed, e.x.refill_ratio,
                           e.x.spread_response, e.x.eff_displacement, e.x.impact_decay,
                           e.x.temporal_gap, e.x.temporal_count, e.x.temporal_ds_sum}) {
      row += ',';
      append_double(row, v);
    }
    row += ',';
    row += std::to_string(e.label);
    row += ',';
    row += std::to_string(e.target);
    row += ',';
    append_double(row, e.target_overlap);
    row += ',';
    row += split_name(e.split);
    row += '\n';
    std::fwrite(row.data(), 1, row.size(), f);
  }
  std::fclose(f);
}

std::vector<EventRecord> read_candidates_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open: " + path);
  std::vector<EventRecord> out;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split_csv(line);
    if (c.size() != 24) fail("bad candidates row: " + line);
    EventRecord e;
    e.session = static_cast<int>(to_i64(c[0]));
    e.id = static_cast<int>(to_i64(c[1]));
    e.side = *side_from_name(c[2]);
    e.t0 = to_i64(c[3]);
    e.t1 = to_i64(c[4]);
    e.n_steps = static_cast<int>(to_i64(c[5]));
    e.filters.book_consistency = c[6] == "1";
    e.filters.eff_price = c[7] == "1";
    e.filters.opposite_side = c[8] == "1";
    e.filters.transience = c[9] == "1";
    e.gate = static_cast<int>(to_i64(c[10]));
    e.x.walk_depth = to_f64(c[11]);
    e.x.depletion_speed = to_f64(c[12]);
    e.x.refill_ratio = to_f64(c[13]);
    e.x.spread_response = to_f64(c[14]);
    e.x.eff_displacement = to_f64(c[15]);
    e.x.impact_decay = to_f64(c[16]);
    e.x.temporal_gap = to_f64(c[17]);
    e.x.temporal_count = to_f64(c[18]);
    e.x.temporal_ds_sum = to_f64(c[19]);
    e.label = static_cast<int>(to_i64(c[20]));
    e.target = static_cast<int>(to_i64(c[21]));
    e.target_overlap = to_f64(c[22]);
    e.split = split_from_name(c[23]);
    out.push_back(e);
  }
  return out;
}

void write_steps_csv(const std::string& path,
                     const std::vector<std::pair<int, detect::DeteriorationStep>>& steps) {
  std::FILE* f = open_write(path);
  std::fprintf(f, "session,ts,side,pre_best,post_best,magnitude,q_pre,q_post,"
                  "lb_added,lb_canceled,lb_executed\n");
  for (const auto& [session, st] : steps) {
    std::fprintf(f,
                 "%d,%" PRId64 ",%s,%" PRId64 ",%" PRId64 ",%d,%" PRId64 ",%" PRId64 ",%" PRId64
                 ",%" PRId64 ",%" PRId64 "\n",
                 session, st.ts, side_name(st.side), st.pre_best, st.post_best, st.magnitude,
                 st.q_pre, st.q_post, st.lookback.added, st.lookback.canceled,
                 st.lookback.executed);
  }
  std::fclose(f);
}

void write_scores_csv(const std::string& path, const std::vector<EventRecord>& events) {
  std::FILE* f = open_write(path);
  std::fprintf(f, "session,id,side,t0,t1,n_steps,gate,target,label,split,"
                  "p_mlp,p_mlp_temporal,p_rff\n");
  std::string row;
  for (const auto& e : events) {
    row.clear();
    append_event_core(row, e);
    row += ',';
    row += std::to_string(e.gate);
    row += ',';
    row += std::to_string(e.target);
    row += ',';
    row += std::to_string(e.label);
    row += ',';
    row += split_name(e.split);
    row += ',';
    append_double(row, e.p_mlp);
    row += ',';
    append_double(row, e.p_mlp_temporal);
    row += ',';
    append_double(row, e.p_rff);
    row += '\n';
    std::fwrite(row.data(), 1, row.size(), f);
  }
  std::fclose(f);
}

std::vector<EventRecord> read_scores_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open: " + path);
  std::vector<EventRecord> out;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split_csv(line);
    if (c.size() != 13) fail("bad scores row: " + line);
    EventRecord e;
    e.session = static_cast<int>(to_i64(c[0]));
    e.id = static_cast<int>(to_i64(c[1]));
    e.side = *side_from_name(c[2]);
    e.t0 = to_i64(c[3]);
    e.t1 = to_i64(c[4]);
    e.n_steps = static_cast<int>(to_i64(c[5]));
    e.gate = static_cast<int>(to_i64(c[6]));
    e.target = static_cast<int>(to_i64(c[7]));
    e.label = static_cast<int>(to_i64(c[8]));
    e.split = split_from_name(c[9]);
    e.p_mlp = to_f64(c[10]);
    e.p_mlp_temporal = to_f64(c[11]);
    e.p_rff = to_f64(c[12]);
    out.push_back(e);
  }
  return out;
}

void write_truth_csv(const std::string& path, const std::vector<TruthRecord>& truth) {
  std::FILE* f = open_write(path);
  std::fprintf(f, "session,side,start_ns,end_ns\n");
  for (const auto& t : truth) {
    std::fprintf(f, "%d,%s,%" PRId64 ",%" PRId64 "\n", t.session, side_name(t.side), t.start,
                 t.end);
  }
  std::fclose(f);
}

std::vector<TruthRecord> read_truth_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open: " + path);
  std::vector<TruthRecord> out;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c = split_csv(line);
    if (c.size() != 4) fail("bad truth row: " + line);
    TruthRecord t;
    t.session = static_cast<int>(to_i64(c[0]));
    t.side = *side_from_name(c[1]);
    t.start = to_i64(c[2]);
    t.end = to_i64(c[3]);
    out.push_back(t);
  }
  return out;
}

void write_match_report_json(const std::string& path,
                             const std::map<std::string, truth::MatchReport>& reports,
                             double theta_iou) {
  ordered_json j;
  j["theta_iou"] = theta_iou;
  int tp = 0, fp = 0, fn = 0;
  for (const auto& [key, rep] : reports) {
    ordered_json r;
    r["tp"] = rep.tp;
    r["fp"] = rep.fp;
    r["fn"] = rep.fn;
    ordered_json matches = ordered_json::array();
    for (const auto& e : rep.entries) {
      if (!e.matched_truth) continue;
      matches.push_back({{"predicted", e.predicted}, {"truth", *e.matched_truth}, {"iou", e.iou}});
    }
    r["matches"] = std::move(matches);
    j["sides"][key] = std::move(r);
    tp += rep.tp;
    fp += rep.fp;
    fn += rep.fn;
  }
  j["total"] = {{"tp", tp}, {"fp", fp}, {"fn", fn}};
  std::ofstream out(path);
  out << j.dump(2) << "\n";
}

void write_model_json(const std::string& path, const ModelArtifact& art) {
  ordered_json j;
  j["architecture"] = {{"input_dim", art.architecture.input_dim},
                       {"hidden", art.architecture.hidden},
                       {"dropout", art.architecture.dropout},
                       {"ln_epsilon", art.architecture.ln_epsilon}};
  j["scaler"] = {{"median", art.scaler_median}, {"iqr", art.scaler_iqr}};
  j["weights"] = art.weights;
  j["seed"] = art.seed;
  j["config_digest"] = art.config_digest;
  j["best_epoch"] = art.best_epoch;
  j["best_val_auc"] = art.best_val_auc;
  j["gate_misses"] = art.gate_misses;
  std::ofstream out(path);
  out << j.dump(2) << "\n";
}

ModelArtifact read_model_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open: " + path);
  const auto j = ordered_json::parse(in);
  ModelArtifact art;
  art.architecture.input_dim = j["architecture"]["input_dim"].get<int>();
  art.architecture.hidden = j["architecture"]["hidden"].get<std::vector<int>>();
  art.architecture.dropout = j["architecture"]["dropout"].get<double>();
  art.architecture.ln_epsilon = j["architecture"]["ln_epsilon"].get<double>();
  art.scaler_median = j["scaler"]["median"].get<std::vector<double>>();
  art.scaler_iqr = j["scaler"]["iqr"].get<std::vector<double>>();
  art.weights = j["weights"].get<std::vector<double>>();
  art.seed = j["seed"].get<std::uint64_t>();
  art.config_digest = j["config_digest"].get<std::string>();
  art.best_epoch = j["best_epoch"].get<int>();
  art.best_val_auc = j["best_val_auc"].get<double>();
  art.gate_misses = j["gate_misses"].get<int>();
  return art;
}

void write_history_csv(const std::string& path,
                       const std::map<std::string, std::vector<label::EpochStats>>& by_model) {
  std::FILE* f = open_write(path);
  std::fprintf(f, "model,epoch,train_loss,val_loss,val_auc\n");
  std::string row;
  for (const auto& [name, hist] : by_model) {
    for (const auto& st : hist) {
      row.clear();
      row += name;
      row += ',';
      row += std::to_string(st.epoch);
      row += ',';
      append_double(row, st.train_loss);
      row += ',';
      append_double(row, st.val_loss);
      row += ',';
      append_double(row, st.val_auc);
      row += '\n';
      std::fwrite(row.data(), 1, row.size(), f);
    }
  }
  std::fclose(f);
}

std::string config_digest(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

}  // namespace crumble::eval
