#include "ntf/ingest.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

namespace ntf {
namespace {

TransactionRecord trade(const std::string& when, const std::string& lender, const std::string& borrower,
                        double amount, const std::string& maturity = "ON") {
  TransactionRecord r;
  r.timestamp = parse_timestamp(when);
  r.lender_id = lender;
  r.borrower_id = borrower;
  r.amount = amount;
  r.maturity = maturity;
  return r;
}

std::string ledger_text(const std::vector<std::string>& rows) {
  std::string s(kLedgerHeader);
  s += '\n';
  for (const auto& r : rows) s += r + '\n';
  return s;
}

TEST(ParseTimestamp, AcceptsBothSeparatorsAndOptionalSeconds) {
  const Timestamp a = parse_timestamp("2004-03-01T09:10");
  const Timestamp b = parse_timestamp("2004-03-01 09:10:00");
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.second_of_day, 9 * 3600 + 600);
  EXPECT_EQ(format_timestamp(parse_timestamp("2004-12-31T17:59:59")), "2004-12-31T17:59:59");
  EXPECT_THROW(parse_timestamp("2004-02-30T09:00"), std::invalid_argument);
  EXPECT_THROW(parse_timestamp("2004-03-01T24:00"), std::invalid_argument);
  EXPECT_THROW(parse_timestamp("2004-03-01"), std::invalid_argument);
}

TEST(LoadTransactions, HeaderOnlyGivesNoRecords) {
  std::istringstream in(ledger_text({}));
  const LoadReport rep = load_transactions(in);
  EXPECT_TRUE(rep.records.empty());
  EXPECT_TRUE(rep.errors.empty());
}

TEST(LoadTransactions, MissingOrWrongHeaderIsFatal) {
  std::istringstream empty("");
  EXPECT_THROW(load_transactions(empty), ledger_error);
  std::istringstream wrong("time,lender,borrower\n");
  EXPECT_THROW(load_transactions(wrong), ledger_error);
  EXPECT_THROW(load_transactions(std::string("/nonexistent/ledger.csv")), std::ios_base::failure);
}

TEST(LoadTransactions, SingleRowRoundTrips) {
  const std::string row = "2004-03-01T09:10:00,BANK_A,BANK_B,7.5,borrower,ON,1,0";
  std::istringstream in(ledger_text({row}));
  const LoadReport rep = load_transactions(in);
  ASSERT_EQ(rep.records.size(), 1u);
  const auto& r = rep.records[0];
  EXPECT_EQ(r.lender_id, "BANK_A");
  EXPECT_EQ(r.borrower_id, "BANK_B");
  EXPECT_EQ(r.amount, 7.5);
  EXPECT_EQ(r.proposer, Proposer::borrower);
  EXPECT_EQ(r.maturity, "ON");
  EXPECT_TRUE(r.lender_domestic);
  EXPECT_FALSE(r.borrower_domestic);
  EXPECT_EQ(format_ledger_row(r), row);

  std::ostringstream out;
  write_ledger(out, rep.records);
  std::istringstream back(out.str());
  EXPECT_EQ(load_transactions(back).records, rep.records);
}

TEST(LoadTransactions, BadRowsAreReportedWithLineNumbers) {
  std::istringstream in(ledger_text({
      "2004-03-01T09:10,A,B,1.0,lender,ON,1,1",
      "2004-03-01T09:11,A,B,0,lender,ON,1,1",
      "2004-03-01T09:12,A,B,-2,lender,ON,1,1",
      "2004-03-01T09:13,A,A,1.0,lender,ON,1,1",
      "2004-03-01T09:14,A,B,1.0,dealer,ON,1,1",
      "2004-03-01T09:15,A,B,1.0,lender,ON,1",
      "2004-03-01T09:16,A,B,2.0,borrower,ONL,0,yes",
      "2004-03-01T09:17,C,B,3.0,borrower,1W,0,0",
  }));
  const LoadReport rep = load_transactions(in);
  ASSERT_EQ(rep.records.size(), 2u);
  EXPECT_EQ(rep.records[1].amount, 3.0);
  ASSERT_EQ(rep.errors.size(), 6u);
  const std::size_t lines[] = {3, 4, 5, 6, 7, 8};
  for (std::size_t e = 0; e < 6; ++e) EXPECT_EQ(rep.errors[e].line, lines[e]);
  EXPECT_NE(rep.errors[0].message.find("positive"), std::string::npos);
}

TEST(FilterOvernight, KeepsOnAndOnlOnly) {
  std::vector<TransactionRecord> all;
  for (int i = 0; i < 4; ++i) all.push_back(trade("2004-03-01T09:00", "A", "B", 1.0, "ON"));
  EXPECT_EQ(filter_overnight(all).size(), 4u);

  // 43 ON, 43 ONL, 14 term: the overnight share is 86%.
  std::vector<TransactionRecord> mixed;
  for (int i = 0; i < 43; ++i) mixed.push_back(trade("2004-03-01T09:00", "A", "B", 1.0, "ON"));
  for (int i = 0; i < 43; ++i) mixed.push_back(trade("2004-03-01T09:00", "A", "B", 1.0, "ONL"));
  for (int i = 0; i < 7; ++i) mixed.push_back(trade("2004-03-01T09:00", "A", "B", 1.0, "1W"));
  for (int i = 0; i < 7; ++i) mixed.push_back(trade("2004-03-01T09:00", "A", "B", 1.0, "TN"));
  const auto kept = filter_overnight(mixed);
  EXPECT_EQ(kept.size(), 86u);
  EXPECT_DOUBLE_EQ(static_cast<double>(kept.size()) / static_cast<double>(mixed.size()), 0.86);
  for (const auto& r : kept) EXPECT_TRUE(r.maturity == "ON" || r.maturity == "ONL");
}

TEST(BuildTensor, SingleTradeCreditsBothSides) {
  const auto built = build_tensor({trade("2004-03-01T09:10", "A", "B", 7.0)}, 15);
  ASSERT_EQ(built.tensor.dims(), (Dims3{2, 40, 1}));
  // 09:10 lies in [09:00, 09:15), the fifth 15-minute interval.
  EXPECT_EQ(built.tensor(0, 4, 0), 7.0);
  EXPECT_EQ(built.tensor(1, 4, 0), 7.0);
  EXPECT_EQ(built.tensor.sum(), 14.0);
  EXPECT_EQ(built.index.bank_ids, (std::vector<std::string>{"A", "B"}));
  EXPECT_EQ(built.index.day_dates, (std::vector<std::string>{"2004-03-01"}));
}

TEST(BuildTensor, IntervalBoundaries) {
  const auto built = build_tensor({trade("2004-03-01T09:15", "A", "B", 1.0), trade("2004-03-01T08:00", "A", "B", 2.0),
                                   trade("2004-03-01T18:00", "A", "B", 4.0), trade("2004-03-01T17:59:59", "A", "B", 8.0)},
                                  15);
  EXPECT_EQ(built.tensor(0, 5, 0), 1.0);   // 09:15 opens the sixth interval
  EXPECT_EQ(built.tensor(0, 0, 0), 2.0);   // window open
  EXPECT_EQ(built.tensor(0, 39, 0), 12.0);  // 18:00 folds into the last interval
  EXPECT_TRUE(built.out_of_window.empty());
}

TEST(BuildTensor, OutOfWindowTradesAreExcluded) {
  const std::vector<TransactionRecord> recs{trade("2004-03-01T07:59:59", "A", "B", 1.0),
                                            trade("2004-03-01T10:00", "A", "C", 2.0),
                                            trade("2004-03-01T18:00:01", "D", "B", 4.0),
                                            trade("2004-03-02T23:00", "E", "F", 8.0)};
  const auto built = build_tensor(recs, 60);
  EXPECT_EQ(built.out_of_window, (std::vector<std::size_t>{0, 2, 3}));
  EXPECT_EQ(built.index.bank_ids, (std::vector<std::string>{"A", "C"}));
  EXPECT_EQ(built.index.day_dates.size(), 1u);
  EXPECT_EQ(built.tensor.sum(), 4.0);
  EXPECT_EQ(built.tensor(0, 2, 0), 2.0);
}

TEST(BuildTensor, DaysAndBanksAreSorted) {
  const auto built = build_tensor({trade("2004-03-05T09:00", "Z", "M", 1.0), trade("2004-03-01T09:00", "B", "A", 1.0)}, 60);
  EXPECT_EQ(built.index.bank_ids, (std::vector<std::string>{"A", "B", "M", "Z"}));
  EXPECT_EQ(built.index.day_dates, (std::vector<std::string>{"2004-03-01", "2004-03-05"}));
  EXPECT_EQ(built.tensor(3, 1, 1), 1.0);
}

TEST(BuildTensor, PerBankMassEqualsLedgerVolume) {
  // Amounts are multiples of 1/64, so all sums are exact in binary.
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> bank(0, 7), minute(8 * 60, 18 * 60), day(1, 9), units(1, 640);
  const int deltas[] = {10, 15, 30, 60, 120, 600};
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<TransactionRecord> recs;
    std::map<std::string, double> volume;
    double total = 0.0;
    const int rows = 1 + trial * 3;
    for (int p = 0; p < rows; ++p) {
      const int l = bank(rng);
      int b = bank(rng);
      if (b == l) b = (b + 1) % 8;
      const int m = minute(rng);
      char when[32];
      std::snprintf(when, sizeof when, "2004-03-%02dT%02d:%02d", day(rng), m / 60, m % 60);
      const double amount = units(rng) / 64.0;
      recs.push_back(trade(when, "K" + std::to_string(l), "K" + std::to_string(b), amount));
      volume[recs.back().lender_id] += amount;
      volume[recs.back().borrower_id] += amount;
      total += amount;
    }
    const auto built = build_tensor(recs, deltas[trial % 6]);
    ASSERT_TRUE(built.out_of_window.empty());
    EXPECT_EQ(built.tensor.sum(), 2.0 * total);
    const auto dims = built.tensor.dims();
    for (std::size_t i = 0; i < dims.n; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < dims.t; ++j)
        for (std::size_t k = 0; k < dims.d; ++k) row += built.tensor(i, j, k);
      EXPECT_EQ(row, volume.at(built.index.bank_ids[i]));
    }
  }
}

TEST(BuildTensor, IntervalWidthMustDivideWindow) {
  EXPECT_THROW(build_tensor({}, 7), std::invalid_argument);
  EXPECT_THROW(build_tensor({}, 0), std::invalid_argument);
  EXPECT_THROW(build_tensor({}, 601), std::invalid_argument);
  EXPECT_NO_THROW(build_tensor({}, 600));
  EXPECT_NO_THROW(build_tensor({}, 1));
}

TEST(TensorIndex, JsonRoundTrip) {
  const auto built = build_tensor({trade("2004-03-05T09:00", "Z", "M", 1.0)}, 20);
  const TensorIndex back = index_from_json(index_to_json(built.index));
  EXPECT_EQ(back.bank_ids, built.index.bank_ids);
  EXPECT_EQ(back.day_dates, built.index.day_dates);
  EXPECT_EQ(back.delta_minutes, 20);
  EXPECT_EQ(back.intervals(), 30u);
  EXPECT_THROW(index_from_json(nlohmann::json{{"schema", "other"}}), std::invalid_argument);
}

TEST(DailySeries, CountsBanksAndTrades) {
  const auto s = daily_series({trade("2004-03-02T09:00", "A", "B", 1.0), trade("2004-03-01T09:00", "A", "B", 1.0),
                               trade("2004-03-02T10:00", "C", "B", 1.0)});
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].date, "2004-03-01");
  EXPECT_EQ(s[0].active_banks, 2u);
  EXPECT_EQ(s[0].trades, 1u);
  EXPECT_EQ(s[1].active_banks, 3u);
  EXPECT_EQ(s[1].trades, 2u);
}

TEST(MovingAverage, TrailingWindow) {
  std::vector<double> ramp(100);
  for (std::size_t p = 0; p < ramp.size(); ++p) ramp[p] = static_cast<double>(p + 1);
  const auto ma = moving_average(ramp, 20);
  EXPECT_DOUBLE_EQ(ma[0], 1.0);
  EXPECT_DOUBLE_EQ(ma[3], 2.5);
  EXPECT_DOUBLE_EQ(ma[19], 10.5);
  EXPECT_DOUBLE_EQ(ma[99], 90.5);
  EXPECT_EQ(moving_average(ramp, 1), ramp);
  EXPECT_THROW(moving_average(ramp, 0), std::invalid_argument);
}

}  // namespace
}  // namespace ntf
