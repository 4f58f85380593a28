// ntf: command-line front end for synthesis, ingestion, fitting, rank
// scanning and analysis.
//
// Exit codes: 0 success, 1 usage, 2 I/O or inconsistent input files,
// 3 numerical failure.

#include "ntf/ntf.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#ifndef NTF_VERSION
#define NTF_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kIo = 2, kNumerical = 3 };

struct usage_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct input_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Config files: TOML/INI as understood by CLI11, or JSON.  A JSON run
// manifest replays its recorded command configuration.

class ConfigAnyFormat : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool defaults, bool write_desc, std::string prefix) const override {
    return CLI::ConfigTOML().to_config(app, defaults, write_desc, std::move(prefix));
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& is) const override {
    std::stringstream buf;
    buf << is.rdbuf();
    const std::string text = buf.str();
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string::npos || text[first] != '{') {
      std::istringstream again(text);
      return CLI::ConfigTOML().from_config(again);
    }
    const json j = json::parse(text);
    std::vector<CLI::ConfigItem> items;
    if (j.value("schema", "") == "ntf.run_manifest") {
      add_section(items, {j.at("command").get<std::string>()}, j.at("config"));
    } else {
      for (const auto& [key, value] : j.items()) {
        if (value.is_object()) {
          add_section(items, {key}, value);
        } else {
          items.push_back(item({}, key, value));
        }
      }
    }
    return items;
  }

 private:
  static CLI::ConfigItem item(std::vector<std::string> parents, const std::string& name, const json& v) {
    CLI::ConfigItem it;
    it.parents = std::move(parents);
    it.name = name;
    auto scalar = [](const json& x) { return x.is_string() ? x.get<std::string>() : x.dump(); };
    if (v.is_array()) {
      for (const auto& e : v) it.inputs.push_back(scalar(e));
    } else {
      it.inputs.push_back(scalar(v));
    }
    return it;
  }

  static void add_section(std::vector<CLI::ConfigItem>& items, const std::vector<std::string>& parents,
                          const json& obj) {
    for (const auto& [key, value] : obj.items()) {
      if (value.is_null()) continue;
      items.push_back(item(parents, key, value));
    }
  }
};

// ---------------------------------------------------------------------------
// Run manifest

std::string sha256_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::ios_base::failure("cannot open '" + path + "' for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  std::vector<char> chunk(1 << 16);
  while (is.read(chunk.data(), static_cast<std::streamsize>(chunk.size())) || is.gcount() > 0) {
    EVP_DigestUpdate(ctx.get(), chunk.data(), static_cast<std::size_t>(is.gcount()));
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md, &len);
  std::ostringstream hex;
  for (unsigned int i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

class Run {
 public:
  Run(std::string command, std::vector<std::string> argv)
      : command_(std::move(command)), argv_(std::move(argv)), started_(utc_now()),
        t0_(std::chrono::steady_clock::now()) {}

  json config = json::object();
  std::optional<std::uint64_t> seed;

  void input(const std::string& role, const std::string& path) {
    inputs_.push_back({{"role", role}, {"path", path}, {"sha256", sha256_file(path)}});
  }
  void output(const fs::path& p) { outputs_.push_back(p.filename().string()); }
  void note(std::string s) { notes_.push_back(std::move(s)); }

  void write_manifest(const fs::path& dir) const {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    const json m{{"schema", "ntf.run_manifest"},
                 {"version", 1},
                 {"tool", "ntf"},
                 {"tool_version", NTF_VERSION},
                 {"command", command_},
                 {"argv", argv_},
                 {"config", config},
                 {"inputs", inputs_},
                 {"seed", seed ? json(*seed) : json(nullptr)},
                 {"outputs", outputs_},
                 {"notes", notes_},
                 {"started_utc", started_},
                 {"wall_clock_seconds", secs}};
    write_text(dir / "run_manifest.json", m.dump(2) + "\n");
  }

  static void write_text(const fs::path& p, const std::string& text) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::ios_base::failure("cannot open '" + p.string() + "' for writing");
    os << text;
    if (!os) throw std::ios_base::failure("write to '" + p.string() + "' failed");
  }

 private:
  std::string command_;
  std::vector<std::string> argv_;
  std::string started_;
  std::chrono::steady_clock::time_point t0_;
  json inputs_ = json::array();
  std::vector<std::string> outputs_;
  std::vector<std::string> notes_;
};

fs::path prepare_out(const std::string& out) {
  fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::ios_base::failure("cannot create output directory '" + out + "': " + ec.message());
  return dir;
}

void write_json(Run& run, const fs::path& p, const json& j) {
  Run::write_text(p, j.dump(2) + "\n");
  run.output(p);
}

void write_file(Run& run, const fs::path& p, const std::string& text) {
  Run::write_text(p, text);
  run.output(p);
}

ntf::DenseTensor3 read_tensor(Run& run, const std::string& path) {
  auto tf = ntf::load_tensor(path);
  run.input("tensor", path);
  return std::move(tf.tensor);
}

std::string na_or(const std::optional<double>& v) { return v ? ntf::fmt_double(*v) : "NA"; }

// ---------------------------------------------------------------------------
// Commands

struct SynthArgs {
  std::size_t banks = 120, intervals = 20, days = 1000;
  double sigma = 0.0;  // 0: T/4
  double peak = 0.8;
  bool raw_pdf = false;
  std::uint64_t seed = 0;
  bool ledger = false;
  std::string out = "synth_out";
};

int cmd_synth(const SynthArgs& a, Run& run) {
  ntf::SyntheticConfig cfg = ntf::SyntheticConfig::with_dims(a.banks, a.intervals, a.days, a.seed);
  if (a.sigma != 0.0) cfg.sigma = a.sigma;
  cfg.peak_fitness = a.peak;
  cfg.scale = a.raw_pdf ? ntf::FitnessScale::raw_pdf : ntf::FitnessScale::peak;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw usage_error(e.what());
  }
  run.config = {{"banks", a.banks}, {"intervals", a.intervals}, {"days", a.days},  {"sigma", cfg.sigma},
                {"peak", a.peak},   {"raw-pdf", a.raw_pdf},     {"seed", a.seed},  {"ledger", a.ledger},
                {"out", a.out}};
  run.seed = a.seed;
  const fs::path dir = prepare_out(a.out);

  const ntf::SyntheticMarket m = ntf::generate(cfg);
  ntf::save_tensor((dir / "tensor.ntf3").string(), m.tensor, ntf::ValueSemantics::trade_counts);
  run.output(dir / "tensor.ntf3");

  json gt{{"schema", "ntf.synthetic_truth"},
          {"version", 1},
          {"dims", {cfg.n, cfg.t, cfg.d}},
          {"group_sizes", cfg.group_sizes},
          {"sigma", cfg.sigma},
          {"mus", cfg.mus},
          {"scale", a.raw_pdf ? "raw_pdf" : "peak"},
          {"peak_fitness", cfg.peak_fitness},
          {"seed", cfg.seed},
          {"group", m.truth.group},
          {"fitness", m.truth.fitness},
          {"participation", m.truth.participation}};
  write_json(run, dir / "ground_truth.json", gt);

  if (ntf::kWindowMinutes % static_cast<int>(cfg.t) == 0) {
    ntf::TensorIndex idx;
    idx.delta_minutes = ntf::kWindowMinutes / static_cast<int>(cfg.t);
    for (std::size_t i = 0; i < cfg.n; ++i) idx.bank_ids.push_back(ntf::synthetic_bank_id(i));
    const std::chrono::sys_days start{std::chrono::year{2001} / 1 / 1};
    for (std::size_t k = 0; k < cfg.d; ++k)
      idx.day_dates.push_back(ntf::format_date(start + std::chrono::days{static_cast<int>(k)}));
    write_json(run, dir / "index.json", ntf::index_to_json(idx));
    if (a.ledger) {
      std::ostringstream os;
      ntf::write_ledger(os, ntf::synthetic_ledger(cfg));
      write_file(run, dir / "ledger.csv", os.str());
    }
  } else {
    run.note("T does not divide the 600-minute window: no index or ledger written");
    if (a.ledger) std::cerr << "warning: T=" << cfg.t << " does not divide 600 minutes; ledger not written\n";
  }
  run.write_manifest(dir);
  std::cout << "synthetic tensor " << cfg.n << "x" << cfg.t << "x" << cfg.d << ", mass " << m.tensor.sum() << " -> "
            << dir.string() << "\n";
  return kOk;
}

struct IngestArgs {
  std::string ledger;
  int delta = 15;
  bool all_maturities = false;
  std::string out = "ingest_out";
};

int cmd_ingest(const IngestArgs& a, Run& run) {
  try {
    ntf::check_delta(a.delta);
  } catch (const std::invalid_argument& e) {
    throw usage_error(e.what());
  }
  run.config = {{"ledger", a.ledger}, {"delta", a.delta}, {"all-maturities", a.all_maturities}, {"out", a.out}};
  const ntf::LoadReport loaded = ntf::load_transactions(a.ledger);
  run.input("ledger", a.ledger);
  const fs::path dir = prepare_out(a.out);

  const auto kept = a.all_maturities ? loaded.records : ntf::filter_overnight(loaded.records);
  const ntf::BuildResult built = ntf::build_tensor(kept, a.delta);
  double amount = 0.0;
  for (std::size_t p = 0, skip = 0; p < kept.size(); ++p) {
    if (skip < built.out_of_window.size() && built.out_of_window[skip] == p) {
      ++skip;
      continue;
    }
    amount += kept[p].amount;
  }

  ntf::save_tensor((dir / "tensor.ntf3").string(), built.tensor, ntf::ValueSemantics::million_eur);
  run.output(dir / "tensor.ntf3");
  write_json(run, dir / "index.json", ntf::index_to_json(built.index));

  json rejected = json::array();
  for (const auto& e : loaded.errors) rejected.push_back({{"line", e.line}, {"message", e.message}});
  const auto dims = built.tensor.dims();
  const json report{{"schema", "ntf.ingest_report"},
                    {"version", 1},
                    {"rows_parsed", loaded.records.size()},
                    {"rows_rejected", loaded.errors.size()},
                    {"rejected", rejected},
                    {"rows_after_maturity_filter", kept.size()},
                    {"rows_filtered_by_maturity", loaded.records.size() - kept.size()},
                    {"rows_out_of_window", built.out_of_window.size()},
                    {"rows_binned", kept.size() - built.out_of_window.size()},
                    {"amount_binned_mEUR", amount},
                    {"tensor_dims", {dims.n, dims.t, dims.d}},
                    {"tensor_mass", built.tensor.sum()}};
  write_json(run, dir / "ingest_report.json", report);

  for (const auto& e : loaded.errors) std::cerr << a.ledger << ":" << e.line << ": " << e.message << "\n";
  if (built.tensor.empty()) {
    std::cerr << "warning: no in-window transactions; the tensor is empty\n";
    run.note("empty tensor");
  }
  run.write_manifest(dir);
  std::cout << "tensor " << dims.n << "x" << dims.t << "x" << dims.d << ", mass " << ntf::fmt_double(built.tensor.sum())
            << " mEUR (" << loaded.errors.size() << " rejected rows) -> " << dir.string() << "\n";
  return kOk;
}

struct FitArgs {
  std::string tensor;
  int rank = 0;
  int restarts = 20;
  std::uint64_t seed = 0;
  int max_sweeps = 500;
  double tol = 1e-8;
  std::string init = "scaled";
  int jobs = 1;
  std::string out = "fit_out";
};

ntf::FitConfig fit_config(int rank, int restarts, std::uint64_t seed, int max_sweeps, double tol,
                          const std::string& init, int jobs) {
  ntf::FitConfig cfg;
  cfg.rank = rank;
  cfg.restarts = restarts;
  cfg.seed = seed;
  cfg.max_sweeps = max_sweeps;
  cfg.rel_tol = tol;
  cfg.init = init == "uniform" ? ntf::InitKind::random_uniform : ntf::InitKind::random_scaled;
  cfg.jobs = jobs;
  if (jobs < 1) throw usage_error("--jobs must be at least 1");
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw usage_error(e.what());
  }
  return cfg;
}

int cmd_fit(const FitArgs& a, Run& run) {
  const ntf::FitConfig cfg = fit_config(a.rank, a.restarts, a.seed, a.max_sweeps, a.tol, a.init, a.jobs);
  run.config = {{"tensor", a.tensor},         {"rank", a.rank}, {"restarts", a.restarts}, {"seed", a.seed},
                {"max-sweeps", a.max_sweeps}, {"tol", a.tol},   {"init", a.init},         {"jobs", a.jobs},
                {"out", a.out}};
  run.seed = a.seed;
  const ntf::DenseTensor3 x = read_tensor(run, a.tensor);
  if (x.empty()) throw input_error("tensor '" + a.tensor + "' is empty");
  const fs::path dir = prepare_out(a.out);

  const ntf::FitBestResult fb = ntf::fit_best(x, cfg);
  write_json(run, dir / "fit.json", ntf::fit_to_json(fb.best));
  write_json(run, dir / "restarts.json", ntf::restart_summary(fb));
  run.write_manifest(dir);
  std::cout << "rank " << a.rank << ": best rel_error " << ntf::fmt_double(fb.best.rel_error) << " (restart "
            << fb.best_index << ", " << fb.best.sweeps_used << " sweeps"
            << (fb.best.converged ? "" : ", not converged") << ")\n";
  return kOk;
}

struct ScanArgs {
  std::string tensor;
  int rmax = 0;
  double lcc = 85.0;
  int restarts = 20;
  std::uint64_t seed = 0;
  int max_sweeps = 500;
  double tol = 1e-8;
  int jobs = 1;
  std::string out = "corcondia_out";
};

int cmd_corcondia(const ScanArgs& a, Run& run) {
  if (a.rmax < 1) throw usage_error("--rmax must be at least 1");
  const ntf::FitConfig cfg = fit_config(1, a.restarts, a.seed, a.max_sweeps, a.tol, "scaled", a.jobs);
  run.config = {{"tensor", a.tensor}, {"rmax", a.rmax},  {"lcc", a.lcc},   {"restarts", a.restarts},
                {"seed", a.seed},     {"max-sweeps", a.max_sweeps}, {"tol", a.tol}, {"jobs", a.jobs},
                {"out", a.out}};
  run.seed = a.seed;
  const ntf::DenseTensor3 x = read_tensor(run, a.tensor);
  if (x.empty()) throw input_error("tensor '" + a.tensor + "' is empty");
  const fs::path dir = prepare_out(a.out);

  const ntf::RankScanReport rep = ntf::rank_scan(x, a.rmax, a.lcc, cfg);
  write_json(run, dir / "rank_scan.json", ntf::rank_scan_to_json(rep));
  std::ostringstream csv;
  ntf::write_rank_scan_csv(csv, rep);
  write_file(run, dir / "rank_scan.csv", csv.str());
  for (const auto& r : rep.ranks) {
    if (r.failed) {
      std::cerr << "rank " << r.rank << ": failed: " << r.message << "\n";
      run.note("rank " + std::to_string(r.rank) + " failed: " + r.message);
    } else {
      std::cerr << "rank " << r.rank << ": CC " << r.cc_mean << " [" << r.cc_lo << ", " << r.cc_hi << "]\n";
    }
  }
  run.write_manifest(dir);
  std::cout << "selected_rank " << (rep.selected_rank ? std::to_string(*rep.selected_rank) : "none") << "\n";
  return kOk;
}

struct AnalyzeArgs {
  std::string fit;
  std::string index;
  std::string ledger;
  double percentile = 90.0;
  std::size_t smooth = 20;
  std::string out = "analysis_out";
};

int cmd_analyze(const AnalyzeArgs& a, Run& run) {
  if (!(a.percentile >= 0.0 && a.percentile < 100.0)) throw usage_error("--percentile must lie in [0, 100)");
  if (a.smooth < 1) throw usage_error("--smooth must be at least 1");
  run.config = {{"fit", a.fit},
                {"index", a.index},
                {"ledger", a.ledger.empty() ? json(nullptr) : json(a.ledger)},
                {"percentile", a.percentile},
                {"smooth", a.smooth},
                {"out", a.out}};

  auto read_json = [&](const std::string& role, const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::ios_base::failure("cannot open " + role + " file '" + path + "'");
    json j;
    try {
      j = json::parse(is);
    } catch (const json::exception& e) {
      throw input_error(role + " file '" + path + "' is not valid JSON: " + e.what());
    }
    run.input(role, path);
    return j;
  };
  ntf::FitResult fit;
  ntf::TensorIndex index;
  try {
    fit = ntf::fit_from_json(read_json("fit", a.fit));
    index = ntf::index_from_json(read_json("index", a.index));
  } catch (const json::exception& e) {
    throw input_error(e.what());
  } catch (const std::invalid_argument& e) {
    throw input_error(e.what());
  }
  const ntf::Dims3 dims = fit.factors.dims();
  if (dims.n != index.bank_ids.size() || dims.t != index.intervals() || dims.d != index.day_dates.size()) {
    throw input_error("fit dims " + ntf::to_string(dims) + " do not match the index (" +
                      std::to_string(index.bank_ids.size()) + " banks, " + std::to_string(index.intervals()) +
                      " intervals, " + std::to_string(index.day_dates.size()) + " days)");
  }
  const fs::path dir = prepare_out(a.out);

  const auto perm = ntf::order_components(fit.factors, ntf::morning_intervals(index.delta_minutes));
  const ntf::KruskalTensor k = ntf::permute_components(fit.factors, perm);
  const std::size_t rank = k.rank();
  const auto sets = ntf::affiliate_banks(k, a.percentile);

  {
    std::ostringstream os;
    os << "interval,start";
    for (std::size_t r = 0; r < rank; ++r) os << ",component_" << r + 1;
    os << "\n";
    for (std::size_t j = 0; j < dims.t; ++j) {
      const int start = ntf::kWindowOpen / 60 + static_cast<int>(j) * index.delta_minutes;
      char hhmm[16];
      std::snprintf(hhmm, sizeof hhmm, "%02d:%02d", start / 60, start % 60);
      os << j + 1 << ',' << hhmm;
      for (std::size_t r = 0; r < rank; ++r)
        os << ',' << ntf::fmt_double(k.b(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(r)));
      os << "\n";
    }
    write_file(run, dir / "intraday.csv", os.str());
  }

  const ntf::Matrix scaled_c = k.scaled_c();
  const ntf::ShareTable shares = ntf::component_share(k);
  std::vector<std::vector<double>> interday_ma(rank), share_ma(rank), member_raw(rank), member_ma(rank);
  for (std::size_t r = 0; r < rank; ++r) {
    const auto col = static_cast<Eigen::Index>(r);
    std::vector<double> c(scaled_c.col(col).data(), scaled_c.col(col).data() + scaled_c.rows());
    interday_ma[r] = ntf::moving_average(c, a.smooth);
    // Zero-activity days contribute 0 share to the smoothed series.
    std::vector<double> s(dims.d);
    for (std::size_t d = 0; d < dims.d; ++d) s[d] = shares.at(d, r).value_or(0.0);
    share_ma[r] = ntf::moving_average(s, a.smooth);
    const ntf::Vector mm = ntf::mean_membership(k, r, sets[r]);
    member_raw[r].assign(mm.data(), mm.data() + mm.size());
    member_ma[r] = ntf::moving_average(member_raw[r], a.smooth);
  }
  {
    std::ostringstream os;
    os << "day,date";
    for (std::size_t r = 0; r < rank; ++r) os << ",activity_" << r + 1 << ",activity_" << r + 1 << "_ma";
    for (std::size_t r = 0; r < rank; ++r) os << ",share_" << r + 1 << ",share_" << r + 1 << "_ma";
    for (std::size_t r = 0; r < rank; ++r) os << ",membership_" << r + 1 << ",membership_" << r + 1 << "_ma";
    os << "\n";
    for (std::size_t d = 0; d < dims.d; ++d) {
      os << d + 1 << ',' << index.day_dates[d];
      for (std::size_t r = 0; r < rank; ++r)
        os << ',' << ntf::fmt_double(scaled_c(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(r))) << ','
           << ntf::fmt_double(interday_ma[r][d]);
      for (std::size_t r = 0; r < rank; ++r) os << ',' << na_or(shares.at(d, r)) << ',' << ntf::fmt_double(share_ma[r][d]);
      for (std::size_t r = 0; r < rank; ++r)
        os << ',' << ntf::fmt_double(member_raw[r][d]) << ',' << ntf::fmt_double(member_ma[r][d]);
      os << "\n";
    }
    write_file(run, dir / "interday.csv", os.str());
  }

  json comps = json::array();
  for (std::size_t r = 0; r < rank; ++r) {
    std::vector<std::string> ids;
    for (auto i : sets[r]) ids.push_back(index.bank_ids[i]);
    comps.push_back({{"component", r + 1},
                     {"source_component", perm[r] + 1},
                     {"weight", k.weights[static_cast<Eigen::Index>(r)]},
                     {"affiliated_banks", ids},
                     {"affiliated_rows", sets[r]}});
  }
  const ntf::Matrix jac = ntf::jaccard_matrix(sets);
  json bundle{{"schema", "ntf.analysis"},
              {"version", 1},
              {"rank", rank},
              {"percentile", a.percentile},
              {"smoothing_window_days", a.smooth},
              {"components", comps},
              {"jaccard", ntf::matrix_to_json(jac)}};

  if (!a.ledger.empty()) {
    const ntf::LoadReport loaded = ntf::load_transactions(a.ledger);
    run.input("ledger", a.ledger);
    const auto records = ntf::filter_overnight(loaded.records);
    const auto domestic = ntf::domestic_flags(records, index);
    json roles = json::array(), nationality = json::array();
    for (std::size_t r = 0; r < rank; ++r) {
      const ntf::RoleFrequencies f = ntf::attribute_frequencies(records, index, sets[r]);
      json means = json::object();
      for (std::size_t q = 0; q < 4; ++q)
        means[ntf::kRoleNames[q]] = {{"mean", f.mean[q].mean}, {"ci95", {f.mean[q].lo, f.mean[q].hi}}};
      roles.push_back({{"component", r + 1}, {"banks", f.banks.size()}, {"excluded", f.excluded}, {"roles", means}});
      const ntf::NationalityReport nr = ntf::nationality_test(sets[r], domestic);
      nationality.push_back({{"component", r + 1},
                             {"members", nr.members},
                             {"domestic", nr.domestic},
                             {"observed_share", nr.observed_share},
                             {"population_share", nr.p},
                             {"band90", {nr.band_lo, nr.band_hi}},
                             {"outside_band", nr.outside}});
    }
    bundle["roles"] = roles;
    bundle["nationality"] = nationality;
  } else {
    run.note("no ledger given: role and nationality statistics skipped");
  }
  write_json(run, dir / "analysis.json", bundle);
  run.write_manifest(dir);
  std::cout << "analysis of " << rank << " components -> " << dir.string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nonnegative tensor factorization of transaction data"};
  app.set_version_flag("--version", NTF_VERSION);
  app.require_subcommand(1);
  app.fallthrough();
  app.config_formatter(std::make_shared<ConfigAnyFormat>());
  app.set_config("--config", "", "Read options from a TOML/INI file or a run_manifest.json; flags take precedence");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Generate the synthetic three-group market");
  synth->add_option("--banks", sa.banks, "Number of banks N")->capture_default_str();
  synth->add_option("--intervals", sa.intervals, "Intraday intervals T")->capture_default_str();
  synth->add_option("--days", sa.days, "Trading days D")->capture_default_str();
  synth->add_option("--sigma", sa.sigma, "Fitness width (default T/4)");
  synth->add_option("--peak", sa.peak, "Peak fitness of each group")->capture_default_str();
  synth->add_flag("--raw-pdf", sa.raw_pdf, "Use the normal density itself as fitness");
  synth->add_option("--seed", sa.seed, "Random seed")->capture_default_str();
  synth->add_flag("--ledger", sa.ledger, "Also write the market as a ledger CSV");
  synth->add_option("--out", sa.out, "Output directory")->capture_default_str();

  IngestArgs ia;
  auto* ingest = app.add_subcommand("ingest", "Bin a transaction ledger into a tensor");
  ingest->add_option("ledger", ia.ledger, "Ledger CSV")->required();
  ingest->add_option("--delta", ia.delta, "Interval width in minutes (divides 600)")->capture_default_str();
  ingest->add_flag("--all-maturities", ia.all_maturities, "Keep non-overnight maturities");
  ingest->add_option("--out", ia.out, "Output directory")->capture_default_str();

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "Best-of-restarts nonnegative CP fit");
  fit->add_option("tensor", fa.tensor, "Tensor file")->required();
  fit->add_option("--rank", fa.rank, "CP rank")->required();
  fit->add_option("--restarts", fa.restarts, "Random restarts")->capture_default_str();
  fit->add_option("--seed", fa.seed, "Base seed; restart k uses seed + k")->capture_default_str();
  fit->add_option("--max-sweeps", fa.max_sweeps, "ALS sweep budget")->capture_default_str();
  fit->add_option("--tol", fa.tol, "Relative objective change tolerance")->capture_default_str();
  fit->add_option("--init", fa.init, "Initialization")->check(CLI::IsMember({"scaled", "uniform"}))->capture_default_str();
  fit->add_option("--jobs", fa.jobs, "Worker threads")->capture_default_str();
  fit->add_option("--out", fa.out, "Output directory")->capture_default_str();

  ScanArgs ca;
  auto* cc = app.add_subcommand("corcondia", "Core-consistency rank scan");
  cc->add_option("tensor", ca.tensor, "Tensor file")->required();
  cc->add_option("--rmax", ca.rmax, "Largest rank to scan")->required();
  cc->add_option("--lcc", ca.lcc, "Core-consistency threshold")->capture_default_str();
  cc->add_option("--restarts", ca.restarts, "Fits per rank")->capture_default_str();
  cc->add_option("--seed", ca.seed, "Base seed")->capture_default_str();
  cc->add_option("--max-sweeps", ca.max_sweeps, "ALS sweep budget")->capture_default_str();
  cc->add_option("--tol", ca.tol, "Relative objective change tolerance")->capture_default_str();
  cc->add_option("--jobs", ca.jobs, "Worker threads")->capture_default_str();
  cc->add_option("--out", ca.out, "Output directory")->capture_default_str();

  AnalyzeArgs aa;
  auto* an = app.add_subcommand("analyze", "Order, share, affiliation and attribute reports");
  an->add_option("fit", aa.fit, "fit.json")->required();
  an->add_option("--index", aa.index, "index.json of the fitted tensor")->required();
  an->add_option("--ledger", aa.ledger, "Ledger CSV for role and nationality statistics");
  an->add_option("--percentile", aa.percentile, "Affiliation percentile")->capture_default_str();
  an->add_option("--smooth", aa.smooth, "Moving-average window for interday series (days)")->capture_default_str();
  an->add_option("--out", aa.out, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  }

  const std::vector<std::string> args(argv, argv + argc);
  const std::string command = app.get_subcommands().front()->get_name();
  Run run(command, args);
  try {
    if (command == "synth") return cmd_synth(sa, run);
    if (command == "ingest") return cmd_ingest(ia, run);
    if (command == "fit") return cmd_fit(fa, run);
    if (command == "corcondia") return cmd_corcondia(ca, run);
    return cmd_analyze(aa, run);
  } catch (const usage_error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ntf::numerical_error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const ntf::format_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const ntf::ledger_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const input_error& e) {
    std::cerr << "inconsistent input: " << e.what() << "\n";
    return kIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  }
}
