#pragma once

// Synthetic market rendered as a transaction ledger, so the ingest pipeline
// can be run end to end against a known tensor.

#include "ntf/ingest.hpp"
#include "ntf/synthetic.hpp"

#include <chrono>
#include <string>
#include <vector>

namespace ntf {

inline std::string synthetic_bank_id(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "B%04zu", i);
  return buf;
}

/// Every synthetic trade becomes one ON record of 1.0 mEUR stamped in the
/// middle of its interval; day k is 2001-01-01 + k.  Lender side, proposer
/// and nationality are deterministic placeholders (the synthetic model has
/// no roles).  Requires T to divide the 600-minute window.
inline std::vector<TransactionRecord> synthetic_ledger(const SyntheticConfig& cfg) {
  if (kWindowMinutes % static_cast<int>(cfg.t) != 0) {
    throw std::invalid_argument("synthetic ledger needs T dividing 600 minutes, got T=" + std::to_string(cfg.t));
  }
  const int delta = kWindowMinutes / static_cast<int>(cfg.t);
  const std::chrono::sys_days start{std::chrono::year{2001} / 1 / 1};
  std::vector<TransactionRecord> out;
  simulate_market(cfg, [&](const SyntheticTrade& tr) {
    TransactionRecord r;
    r.timestamp.day = start + std::chrono::days{static_cast<int>(tr.k)};
    r.timestamp.second_of_day = kWindowOpen + static_cast<int>(tr.t) * delta * 60 + delta * 30;
    const bool swap = (tr.t + tr.k) % 2 == 1;
    const std::size_t lender = swap ? tr.j : tr.i;
    const std::size_t borrower = swap ? tr.i : tr.j;
    r.lender_id = synthetic_bank_id(lender);
    r.borrower_id = synthetic_bank_id(borrower);
    r.amount = 1.0;
    r.proposer = (tr.i + tr.j + tr.t) % 2 == 0 ? Proposer::lender : Proposer::borrower;
    r.maturity = "ON";
    r.lender_domestic = lender % 3 != 0;
    r.borrower_domestic = borrower % 3 != 0;
    out.push_back(std::move(r));
  });
  return out;
}

}  // namespace ntf
