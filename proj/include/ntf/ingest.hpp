#pragma once

// Transaction ledgers and their binning into (bank x interval x day) tensors.
//
// Ledger CSV schema, version 1 (header row required, comma separated):
//
//   timestamp,lender_id,borrower_id,amount_mEUR,proposer,maturity,lender_domestic,borrower_domestic
//
//   timestamp          ISO-8601 local market time, YYYY-MM-DDTHH:MM[:SS] (a space may replace 'T')
//   lender_id          opaque bank identifier, no commas
//   borrower_id        opaque bank identifier, must differ from lender_id
//   amount_mEUR        positive decimal, million EUR
//   proposer           "lender" or "borrower" (who posted the quote)
//   maturity           label such as ON, ONL, 1W
//   *_domestic         1/0 or true/false

#include "ntf/tensor.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace ntf {

enum class Proposer { lender, borrower };

struct Timestamp {
  std::chrono::sys_days day{};
  int second_of_day = 0;

  friend auto operator<=>(const Timestamp&, const Timestamp&) = default;
};

struct TransactionRecord {
  Timestamp timestamp;
  std::string lender_id;
  std::string borrower_id;
  double amount = 0.0;  // million EUR
  Proposer proposer = Proposer::lender;
  std::string maturity;
  bool lender_domestic = false;
  bool borrower_domestic = false;

  friend bool operator==(const TransactionRecord&, const TransactionRecord&) = default;
};

inline constexpr std::string_view kLedgerHeader =
    "timestamp,lender_id,borrower_id,amount_mEUR,proposer,maturity,lender_domestic,borrower_domestic";

// ---------------------------------------------------------------------------
// Formatting and parsing helpers

inline std::string format_date(std::chrono::sys_days day) {
  const std::chrono::year_month_day ymd{day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

inline std::string format_timestamp(const Timestamp& ts) {
  char buf[32];
  const int s = ts.second_of_day;
  std::snprintf(buf, sizeof buf, "T%02d:%02d:%02d", s / 3600, (s / 60) % 60, s % 60);
  return format_date(ts.day) + buf;
}

namespace detail {

template <class Int>
bool parse_int(std::string_view s, Int& out) {
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc{} && p == end;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace detail

inline std::chrono::sys_days parse_date(std::string_view s) {
  int y = 0;
  unsigned m = 0, d = 0;
  if (s.size() != 10 || s[4] != '-' || s[7] != '-' || !detail::parse_int(s.substr(0, 4), y) ||
      !detail::parse_int(s.substr(5, 2), m) || !detail::parse_int(s.substr(8, 2), d)) {
    throw std::invalid_argument("bad date '" + std::string(s) + "'");
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw std::invalid_argument("invalid calendar date '" + std::string(s) + "'");
  return std::chrono::sys_days{ymd};
}

inline Timestamp parse_timestamp(std::string_view s) {
  if (s.size() < 16 || (s[10] != 'T' && s[10] != ' ')) {
    throw std::invalid_argument("bad timestamp '" + std::string(s) + "'");
  }
  Timestamp ts;
  ts.day = parse_date(s.substr(0, 10));
  const auto clock = s.substr(11);
  int hh = 0, mm = 0, ss = 0;
  const bool with_seconds = clock.size() == 8;
  if ((clock.size() != 5 && !with_seconds) || clock[2] != ':' || !detail::parse_int(clock.substr(0, 2), hh) ||
      !detail::parse_int(clock.substr(3, 2), mm) ||
      (with_seconds && (clock[5] != ':' || !detail::parse_int(clock.substr(6, 2), ss)))) {
    throw std::invalid_argument("bad time of day in '" + std::string(s) + "'");
  }
  if (hh > 23 || mm > 59 || ss > 59) throw std::invalid_argument("time of day out of range in '" + std::string(s) + "'");
  ts.second_of_day = hh * 3600 + mm * 60 + ss;
  return ts;
}

inline bool parse_flag(std::string_view s) {
  if (s == "1" || s == "true") return true;
  if (s == "0" || s == "false") return false;
  throw std::invalid_argument("bad boolean flag '" + std::string(s) + "'");
}

/// Parses one data row; throws std::invalid_argument describing the violation.
inline TransactionRecord parse_ledger_row(std::string_view line) {
  const auto f = detail::split(line, ',');
  if (f.size() != 8) throw std::invalid_argument("expected 8 fields, got " + std::to_string(f.size()));
  TransactionRecord rec;
  rec.timestamp = parse_timestamp(detail::trim(f[0]));
  rec.lender_id = std::string(detail::trim(f[1]));
  rec.borrower_id = std::string(detail::trim(f[2]));
  if (rec.lender_id.empty() || rec.borrower_id.empty()) throw std::invalid_argument("empty bank identifier");
  if (rec.lender_id == rec.borrower_id) throw std::invalid_argument("lender and borrower are the same bank");
  const auto amount = detail::trim(f[3]);
  auto [p, ec] = std::from_chars(amount.data(), amount.data() + amount.size(), rec.amount);
  if (ec != std::errc{} || p != amount.data() + amount.size()) {
    throw std::invalid_argument("bad amount '" + std::string(amount) + "'");
  }
  if (!(rec.amount > 0.0) || !std::isfinite(rec.amount)) {
    throw std::invalid_argument("amount must be positive, got '" + std::string(amount) + "'");
  }
  const auto prop = detail::trim(f[4]);
  if (prop == "lender") {
    rec.proposer = Proposer::lender;
  } else if (prop == "borrower") {
    rec.proposer = Proposer::borrower;
  } else {
    throw std::invalid_argument("proposer must be 'lender' or 'borrower', got '" + std::string(prop) + "'");
  }
  rec.maturity = std::string(detail::trim(f[5]));
  if (rec.maturity.empty()) throw std::invalid_argument("empty maturity label");
  rec.lender_domestic = parse_flag(detail::trim(f[6]));
  rec.borrower_domestic = parse_flag(detail::trim(f[7]));
  return rec;
}

inline std::string format_ledger_row(const TransactionRecord& r) {
  char amount[64];
  auto [p, ec] = std::to_chars(amount, amount + sizeof amount, r.amount);
  (void)ec;
  return format_timestamp(r.timestamp) + ',' + r.lender_id + ',' + r.borrower_id + ',' + std::string(amount, p) + ',' +
         (r.proposer == Proposer::lender ? "lender" : "borrower") + ',' + r.maturity + ',' +
         (r.lender_domestic ? "1" : "0") + ',' + (r.borrower_domestic ? "1" : "0");
}

inline void write_ledger(std::ostream& os, const std::vector<TransactionRecord>& records) {
  os << kLedgerHeader << '\n';
  for (const auto& r : records) os << format_ledger_row(r) << '\n';
}

struct RowError {
  std::size_t line = 0;  // 1-based, header is line 1
  std::string message;
};

struct LoadReport {
  std::vector<TransactionRecord> records;
  std::vector<RowError> errors;
};

class ledger_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads a ledger.  Malformed rows are reported with line numbers and
/// skipped; a missing or wrong header is fatal.
inline LoadReport load_transactions(std::istream& is) {
  LoadReport out;
  std::string line;
  if (!std::getline(is, line)) throw ledger_error("ledger is empty (header row required)");
  if (detail::trim(line) != kLedgerHeader) {
    throw ledger_error("unexpected ledger header '" + std::string(detail::trim(line)) + "'");
  }
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    try {
      out.records.push_back(parse_ledger_row(line));
    } catch (const std::invalid_argument& e) {
      out.errors.push_back({lineno, e.what()});
    }
  }
  return out;
}

inline LoadReport load_transactions(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::ios_base::failure("cannot open ledger '" + path + "'");
  return load_transactions(is);
}

/// Keeps the overnight maturities ON and ONL.
inline std::vector<TransactionRecord> filter_overnight(const std::vector<TransactionRecord>& records) {
  std::vector<TransactionRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [](const TransactionRecord& r) { return r.maturity == "ON" || r.maturity == "ONL"; });
  return out;
}

// ---------------------------------------------------------------------------
// Binning

inline constexpr int kWindowOpen = 8 * 3600;
inline constexpr int kWindowClose = 18 * 3600;
inline constexpr int kWindowMinutes = (kWindowClose - kWindowOpen) / 60;

struct TensorIndex {
  std::vector<std::string> bank_ids;   // tensor row -> bank, sorted
  std::vector<std::string> day_dates;  // tensor slab -> ISO date, chronological
  int delta_minutes = 0;

  std::size_t intervals() const { return static_cast<std::size_t>(kWindowMinutes / delta_minutes); }
};

struct BuildResult {
  DenseTensor3 tensor;
  TensorIndex index;
  std::vector<std::size_t> out_of_window;  // positions in the input record list
};

inline void check_delta(int delta_minutes) {
  if (delta_minutes <= 0 || kWindowMinutes % delta_minutes != 0) {
    throw std::invalid_argument("interval width " + std::to_string(delta_minutes) +
                                " min does not divide the 600-minute trading window");
  }
}

inline bool in_window(const Timestamp& ts) {
  return ts.second_of_day >= kWindowOpen && ts.second_of_day <= kWindowClose;
}

/// Interval of an in-window timestamp: half-open [start, start + delta),
/// with 18:00 itself folded into the last interval.
inline std::size_t interval_of(const Timestamp& ts, int delta_minutes) {
  const int intervals = kWindowMinutes / delta_minutes;
  const int j = (ts.second_of_day - kWindowOpen) / (delta_minutes * 60);
  return static_cast<std::size_t>(std::min(j, intervals - 1));
}

/// x(i, j, k) = total amount of bank i's trades (either side) in interval j of day k.
inline BuildResult build_tensor(const std::vector<TransactionRecord>& records, int delta_minutes) {
  check_delta(delta_minutes);
  BuildResult out;
  std::set<std::string> banks;
  std::set<std::chrono::sys_days> days;
  for (std::size_t p = 0; p < records.size(); ++p) {
    const auto& r = records[p];
    if (!in_window(r.timestamp)) {
      out.out_of_window.push_back(p);
      continue;
    }
    banks.insert(r.lender_id);
    banks.insert(r.borrower_id);
    days.insert(r.timestamp.day);
  }
  out.index.delta_minutes = delta_minutes;
  out.index.bank_ids.assign(banks.begin(), banks.end());
  std::map<std::string, std::size_t, std::less<>> bank_row;
  for (std::size_t i = 0; i < out.index.bank_ids.size(); ++i) bank_row.emplace(out.index.bank_ids[i], i);
  std::map<std::chrono::sys_days, std::size_t> day_slab;
  for (auto d : days) {
    day_slab.emplace(d, out.index.day_dates.size());
    out.index.day_dates.push_back(format_date(d));
  }

  DenseTensor3 x({banks.size(), out.index.intervals(), days.size()});
  std::size_t next_skip = 0;
  for (std::size_t p = 0; p < records.size(); ++p) {
    if (next_skip < out.out_of_window.size() && out.out_of_window[next_skip] == p) {
      ++next_skip;
      continue;
    }
    const auto& r = records[p];
    const std::size_t j = interval_of(r.timestamp, delta_minutes);
    const std::size_t k = day_slab.at(r.timestamp.day);
    x(bank_row.at(r.lender_id), j, k) += r.amount;
    x(bank_row.at(r.borrower_id), j, k) += r.amount;
  }
  out.tensor = std::move(x);
  return out;
}

inline nlohmann::json index_to_json(const TensorIndex& idx) {
  return {{"schema", "ntf.tensor_index"},
          {"version", 1},
          {"delta_minutes", idx.delta_minutes},
          {"window", {"08:00", "18:00"}},
          {"bank_ids", idx.bank_ids},
          {"day_dates", idx.day_dates}};
}

inline TensorIndex index_from_json(const nlohmann::json& j) {
  if (j.value("schema", "") != "ntf.tensor_index") throw std::invalid_argument("not a tensor index document");
  TensorIndex idx;
  idx.delta_minutes = j.at("delta_minutes").get<int>();
  check_delta(idx.delta_minutes);
  idx.bank_ids = j.at("bank_ids").get<std::vector<std::string>>();
  idx.day_dates = j.at("day_dates").get<std::vector<std::string>>();
  return idx;
}

// ---------------------------------------------------------------------------
// Descriptive daily series

struct DailyActivity {
  std::string date;
  std::size_t active_banks = 0;
  std::size_t trades = 0;
};

inline std::vector<DailyActivity> daily_series(const std::vector<TransactionRecord>& records) {
  std::map<std::chrono::sys_days, std::pair<std::set<std::string>, std::size_t>> per_day;
  for (const auto& r : records) {
    auto& slot = per_day[r.timestamp.day];
    slot.first.insert(r.lender_id);
    slot.first.insert(r.borrower_id);
    ++slot.second;
  }
  std::vector<DailyActivity> out;
  out.reserve(per_day.size());
  for (const auto& [day, slot] : per_day) out.push_back({format_date(day), slot.first.size(), slot.second});
  return out;
}

/// Trailing mean over the last min(w, available) points.
inline std::vector<double> moving_average(const std::vector<double>& series, std::size_t w = 20) {
  if (w < 1) throw std::invalid_argument("moving_average: window must be >= 1");
  std::vector<double> out(series.size());
  for (std::size_t p = 0; p < series.size(); ++p) {
    const std::size_t first = p + 1 >= w ? p + 1 - w : 0;
    double s = 0.0;
    for (std::size_t q = first; q <= p; ++q) s += series[q];
    out[p] = s / static_cast<double>(p + 1 - first);
  }
  return out;
}

}  // namespace ntf
