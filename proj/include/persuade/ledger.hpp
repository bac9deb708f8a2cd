#pragma once

// Append-only hash-chained log of auction records.
//
// entry_hash = SHA-256( seq as 8-byte big-endian || previous hash (32 raw bytes) || record bytes )
//
// The record bytes are the canonical serialization below: one line per participant,
// fields in dataset-CSV order minus the true state (which stays platform-private):
//   auction_id,advertiser_id,signal,budget,industry,aggressiveness,time_bucket,category,bid,won,payment
// The first entry links to SHA-256("persuade-auction-genesis").

#include <array>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "persuade/auction.hpp"
#include "persuade/error.hpp"
#include "persuade/format.hpp"
#include "persuade/hash.hpp"
#include "persuade/market.hpp"
#include "persuade/records_io.hpp"

namespace persuade {

inline const Hash256& genesis_hash() {
  static const Hash256 kGenesis = sha256(std::string_view("persuade-auction-genesis"));
  return kGenesis;
}

inline std::string canonical_record(const AuctionRecord& rec) {
  std::string out;
  const std::string payment = format_double(rec.payment);
  for (const auto& p : rec.participants) {
    out += std::to_string(rec.auction_id) + ',' + std::to_string(p.advertiser) + ',' +
           std::to_string(rec.signal) + ',' + format_double(p.budget) + ',' + std::to_string(p.industry) + ',' +
           format_double(p.aggressiveness) + ',' + std::to_string(rec.context.time_bucket) + ',' +
           std::to_string(rec.context.category) + ',' + format_double(p.bid) + ',' + (p.won ? "1" : "0") +
           ',' + payment + '\n';
  }
  return out;
}

/// Public view of a committed record; the true state is not on the ledger.
struct PublicRecord {
  std::uint64_t auction_id = 0;
  std::size_t signal = 0;
  AdvertiserId winner = 0;
  bool has_winner = false;
  double payment = 0.0;
  std::vector<Bid> bids;
};

inline PublicRecord parse_canonical_record(std::string_view bytes) {
  PublicRecord out;
  std::size_t start = 0;
  bool first = true;
  while (start < bytes.size()) {
    auto end = bytes.find('\n', start);
    if (end == std::string_view::npos) throw Error(ErrorCode::SerializationFailure, "unterminated record line");
    auto f = detail::split_fields(bytes.substr(start, end - start));
    start = end + 1;
    if (f.size() != 11) throw Error(ErrorCode::SerializationFailure, "record line needs 11 fields");
    auto auction_id = parse_int<std::uint64_t>(f[0]);
    auto payment = parse_double(f[10]);
    auto signal = parse_int<std::size_t>(f[2]);
    if (first) {
      out.auction_id = auction_id;
      out.payment = payment;
      out.signal = signal;
      first = false;
    } else if (auction_id != out.auction_id || payment != out.payment || signal != out.signal) {
      throw Error(ErrorCode::SerializationFailure, "record lines disagree on auction fields");
    }
    Bid bid{parse_int<AdvertiserId>(f[1]), parse_double(f[8])};
    if (f[9] == "1") {
      if (out.has_winner) throw Error(ErrorCode::SerializationFailure, "record has two winners");
      out.has_winner = true;
      out.winner = bid.advertiser;
    } else if (f[9] != "0") {
      throw Error(ErrorCode::SerializationFailure, "won flag must be 0 or 1");
    }
    out.bids.push_back(bid);
  }
  if (first) throw Error(ErrorCode::SerializationFailure, "empty record");
  return out;
}

struct LedgerEntry {
  std::uint64_t sequence = 0;
  Hash256 previous{};
  std::string record;  // canonical bytes
  Hash256 hash{};

  bool operator==(const LedgerEntry&) const = default;
};

inline Hash256 compute_entry_hash(std::uint64_t sequence, const Hash256& previous, std::string_view record) {
  std::vector<std::uint8_t> buf;
  buf.reserve(8 + previous.size() + record.size());
  for (int shift = 56; shift >= 0; shift -= 8) buf.push_back(static_cast<std::uint8_t>(sequence >> shift));
  buf.insert(buf.end(), previous.begin(), previous.end());
  buf.insert(buf.end(), record.begin(), record.end());
  return sha256(buf);
}

/// Single-writer chain. Readers may share a const Ledger freely.
class Ledger {
 public:
  const std::vector<LedgerEntry>& entries() const noexcept { return entries_; }
  std::vector<LedgerEntry>& mutable_entries() noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }

  Hash256 head() const { return entries_.empty() ? genesis_hash() : entries_.back().hash; }

  const LedgerEntry& append_canonical(std::string record) {
    LedgerEntry e;
    e.sequence = entries_.size();
    e.previous = head();
    e.record = std::move(record);
    e.hash = compute_entry_hash(e.sequence, e.previous, e.record);
    entries_.push_back(std::move(e));
    return entries_.back();
  }

  const LedgerEntry& append(const AuctionRecord& record) {
    if (record.participants.empty()) {
      throw Error(ErrorCode::SerializationFailure, "record has no participants");
    }
    return append_canonical(canonical_record(record));
  }

 private:
  std::vector<LedgerEntry> entries_;
};

struct ChainVerification {
  bool ok = true;
  std::optional<std::size_t> first_bad;

  static ChainVerification good() { return {}; }
  static ChainVerification bad(std::size_t index) { return {false, index}; }
};

/// Recomputes every link. A truncated suffix still verifies: detecting it needs an
/// externally anchored head hash.
inline ChainVerification verify_chain(const Ledger& ledger) {
  Hash256 expected_prev = genesis_hash();
  const auto& entries = ledger.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (e.sequence != i || e.previous != expected_prev ||
        compute_entry_hash(e.sequence, e.previous, e.record) != e.hash) {
      return ChainVerification::bad(i);
    }
    expected_prev = e.hash;
  }
  return ChainVerification::good();
}

/// Re-settles every committed auction and checks the stored winner and payment.
inline std::vector<AuctionOutcome> replay(const Ledger& ledger) {
  std::vector<AuctionOutcome> outcomes;
  outcomes.reserve(ledger.size());
  for (const auto& e : ledger.entries()) {
    PublicRecord rec;
    try {
      rec = parse_canonical_record(e.record);
    } catch (const Error& err) {
      throw Error(ErrorCode::OutcomeMismatch, "entry " + std::to_string(e.sequence) + ": " + err.what());
    }
    AuctionOutcome out = run_auction(BidSet(rec.bids));
    if (!rec.has_winner || out.winner != rec.winner || out.payment != rec.payment) {
      throw Error(ErrorCode::OutcomeMismatch, "auction " + std::to_string(rec.auction_id));
    }
    outcomes.push_back(std::move(out));
  }
  return outcomes;
}

// ---- JSON-lines persistence ---------------------------------------------

inline std::string ledger_to_jsonl(const Ledger& ledger) {
  std::string out;
  for (const auto& e : ledger.entries()) {
    nlohmann::json j = {
        {"seq", e.sequence}, {"prev", to_hex(e.previous)}, {"record", e.record}, {"hash", to_hex(e.hash)}};
    out += j.dump() + '\n';
  }
  return out;
}

struct LedgerLoadError {
  std::size_t line_index;
  std::string message;
};

/// Parses a ledger file; an unparseable line is reported by its entry index.
inline Ledger ledger_from_jsonl(std::string_view text, std::optional<LedgerLoadError>* error = nullptr) {
  Ledger ledger;
  std::size_t start = 0;
  std::size_t index = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      LedgerEntry e;
      e.sequence = j.at("seq").get<std::uint64_t>();
      e.previous = hash_from_hex(j.at("prev").get<std::string>());
      e.record = j.at("record").get<std::string>();
      e.hash = hash_from_hex(j.at("hash").get<std::string>());
      ledger.mutable_entries().push_back(std::move(e));
    } catch (const std::exception& ex) {
      if (error) {
        *error = LedgerLoadError{index, ex.what()};
        return ledger;
      }
      throw Error(ErrorCode::SerializationFailure, "ledger line " + std::to_string(index) + ": " + ex.what());
    }
    ++index;
  }
  return ledger;
}

}  // namespace persuade
