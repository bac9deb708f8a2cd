#pragma once

// CSV and JSON-lines codecs for populations, auction instances and auction records.
// Numbers are written as shortest round-trip decimals so every file parses back
// to identical bits.

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "persuade/error.hpp"
#include "persuade/format.hpp"
#include "persuade/market.hpp"

namespace persuade {

inline constexpr std::string_view kPopulationHeader = "id,budget,industry,aggressiveness,base_value";
inline constexpr std::string_view kDatasetHeader =
    "auction_id,advertiser_id,signal,state,budget,industry,aggressiveness,time_bucket,category,bid,won,payment";

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

}  // namespace detail

// ---- population ---------------------------------------------------------

inline std::string population_to_csv(const std::vector<AdvertiserProfile>& population) {
  std::string out(kPopulationHeader);
  out += '\n';
  for (const auto& p : population) {
    out += std::to_string(p.id) + ',' + format_double(p.budget) + ',' + std::to_string(p.industry) + ',' +
           format_double(p.aggressiveness) + ',' + format_double(p.base_value) + '\n';
  }
  return out;
}

inline std::vector<AdvertiserProfile> population_from_csv(std::string_view text) {
  std::vector<AdvertiserProfile> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    auto view = detail::strip_cr(line);
    if (lineno++ == 0) {
      if (view != kPopulationHeader) throw Error(ErrorCode::SchemaViolation, "population header mismatch");
      continue;
    }
    if (view.empty()) continue;
    auto f = detail::split_fields(view);
    if (f.size() != 5) throw Error(ErrorCode::SchemaViolation, "population row " + std::to_string(lineno));
    AdvertiserProfile p;
    p.id = parse_int<AdvertiserId>(f[0]);
    p.budget = parse_double(f[1]);
    p.industry = parse_int<std::size_t>(f[2]);
    p.aggressiveness = parse_double(f[3]);
    p.base_value = parse_double(f[4]);
    if (p.id != out.size()) throw Error(ErrorCode::SchemaViolation, "population ids must be dense");
    out.push_back(p);
  }
  return out;
}

// ---- instances ----------------------------------------------------------

inline nlohmann::json instance_to_json(const AuctionInstance& inst) {
  return {{"auction_id", inst.auction_id},
          {"participants", inst.participants},
          {"true_state", inst.true_state},
          {"time_bucket", inst.context.time_bucket},
          {"category", inst.context.category}};
}

inline AuctionInstance instance_from_json(const nlohmann::json& j) {
  AuctionInstance inst;
  inst.auction_id = j.at("auction_id").get<std::uint64_t>();
  inst.participants = j.at("participants").get<std::vector<AdvertiserId>>();
  inst.true_state = j.at("true_state").get<std::size_t>();
  inst.context.time_bucket = j.at("time_bucket").get<std::uint32_t>();
  inst.context.category = j.at("category").get<std::uint32_t>();
  return inst;
}

inline std::string instances_to_jsonl(const std::vector<AuctionInstance>& instances) {
  std::string out;
  for (const auto& inst : instances) out += instance_to_json(inst).dump() + '\n';
  return out;
}

inline std::vector<AuctionInstance> instances_from_jsonl(std::string_view text) {
  std::vector<AuctionInstance> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (detail::strip_cr(line).empty()) continue;
    try {
      out.push_back(instance_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::SchemaViolation, std::string("instance line: ") + e.what());
    }
  }
  return out;
}

// ---- auction records ----------------------------------------------------

inline std::string record_to_csv_rows(const AuctionRecord& rec) {
  std::string out;
  const std::string payment = format_double(rec.payment);
  for (const auto& p : rec.participants) {
    out += std::to_string(rec.auction_id) + ',' + std::to_string(p.advertiser) + ',' +
           std::to_string(rec.signal) + ',' + std::to_string(rec.true_state) + ',' + format_double(p.budget) +
           ',' + std::to_string(p.industry) + ',' + format_double(p.aggressiveness) + ',' +
           std::to_string(rec.context.time_bucket) + ',' + std::to_string(rec.context.category) + ',' +
           format_double(p.bid) + ',' + (p.won ? "1" : "0") + ',' + payment + '\n';
  }
  return out;
}

inline std::string records_to_csv(const std::vector<AuctionRecord>& records) {
  std::string out(kDatasetHeader);
  out += '\n';
  for (const auto& rec : records) out += record_to_csv_rows(rec);
  return out;
}

/// Rows of one auction must be contiguous; exactly one row per auction has won=1.
inline std::vector<AuctionRecord> records_from_csv(std::string_view text) {
  std::vector<AuctionRecord> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  auto finish = [&](AuctionRecord& rec) {
    std::size_t winners = 0;
    for (const auto& p : rec.participants) {
      if (p.won) {
        ++winners;
        rec.winner = p.advertiser;
      }
    }
    if (winners != 1) {
      throw Error(ErrorCode::SchemaViolation, "auction " + std::to_string(rec.auction_id) + " needs one winner");
    }
  };
  while (std::getline(in, line)) {
    auto view = detail::strip_cr(line);
    if (lineno++ == 0) {
      if (view != kDatasetHeader) throw Error(ErrorCode::SchemaViolation, "dataset header mismatch");
      continue;
    }
    if (view.empty()) continue;
    auto f = detail::split_fields(view);
    if (f.size() != 12) throw Error(ErrorCode::SchemaViolation, "dataset row " + std::to_string(lineno));

    auto auction_id = parse_int<std::uint64_t>(f[0]);
    if (out.empty() || out.back().auction_id != auction_id) {
      if (!out.empty()) finish(out.back());
      AuctionRecord rec;
      rec.auction_id = auction_id;
      rec.signal = parse_int<std::size_t>(f[2]);
      rec.true_state = parse_int<std::size_t>(f[3]);
      rec.context.time_bucket = parse_int<std::uint32_t>(f[7]);
      rec.context.category = parse_int<std::uint32_t>(f[8]);
      rec.payment = parse_double(f[11]);
      out.push_back(std::move(rec));
    }
    ParticipantRecord p;
    p.advertiser = parse_int<AdvertiserId>(f[1]);
    p.budget = parse_double(f[4]);
    p.industry = parse_int<std::size_t>(f[5]);
    p.aggressiveness = parse_double(f[6]);
    p.bid = parse_double(f[9]);
    if (f[10] != "0" && f[10] != "1") throw Error(ErrorCode::SchemaViolation, "won must be 0 or 1");
    p.won = f[10] == "1";
    out.back().participants.push_back(p);
  }
  if (!out.empty()) finish(out.back());
  return out;
}

inline nlohmann::json record_to_json(const AuctionRecord& rec) {
  nlohmann::json parts = nlohmann::json::array();
  for (const auto& p : rec.participants) {
    parts.push_back({{"advertiser_id", p.advertiser},
                     {"budget", p.budget},
                     {"industry", p.industry},
                     {"aggressiveness", p.aggressiveness},
                     {"bid", p.bid},
                     {"won", p.won}});
  }
  return {{"auction_id", rec.auction_id},
          {"signal", rec.signal},
          {"state", rec.true_state},
          {"time_bucket", rec.context.time_bucket},
          {"category", rec.context.category},
          {"participants", std::move(parts)},
          {"winner", rec.winner},
          {"payment", rec.payment}};
}

inline AuctionRecord record_from_json(const nlohmann::json& j) {
  AuctionRecord rec;
  rec.auction_id = j.at("auction_id").get<std::uint64_t>();
  rec.signal = j.at("signal").get<std::size_t>();
  rec.true_state = j.at("state").get<std::size_t>();
  rec.context.time_bucket = j.at("time_bucket").get<std::uint32_t>();
  rec.context.category = j.at("category").get<std::uint32_t>();
  for (const auto& p : j.at("participants")) {
    rec.participants.push_back({p.at("advertiser_id").get<AdvertiserId>(), p.at("budget").get<double>(),
                                p.at("industry").get<std::size_t>(), p.at("aggressiveness").get<double>(),
                                p.at("bid").get<double>(), p.at("won").get<bool>()});
  }
  rec.winner = j.at("winner").get<AdvertiserId>();
  rec.payment = j.at("payment").get<double>();
  return rec;
}

inline std::string records_to_jsonl(const std::vector<AuctionRecord>& records) {
  std::string out;
  for (const auto& rec : records) out += record_to_json(rec).dump() + '\n';
  return out;
}

inline std::vector<AuctionRecord> records_from_jsonl(std::string_view text) {
  std::vector<AuctionRecord> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (detail::strip_cr(line).empty()) continue;
    try {
      out.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::SchemaViolation, std::string("record line: ") + e.what());
    }
  }
  return out;
}

// ---- file helpers -------------------------------------------------------

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MissingInput, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Writes through a temporary sibling and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::SerializationFailure, "cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorCode::SerializationFailure, "short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace persuade
