// disclab: phase diagram, constrained spectra, and moment-method experiments
// for average-case matrix discrepancy. Data goes to stdout or --out; progress
// goes to stderr; every artifact starts with a '#'-prefixed JSON metadata line
// echoing the full run configuration.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "disclab/constrained_spectra.hpp"
#include "disclab/coulomb_mcmc.hpp"
#include "disclab/errors.hpp"
#include "disclab/moment_lab.hpp"
#include "disclab/parallel.hpp"
#include "disclab/phase_thresholds.hpp"
#include "disclab/randmat_core.hpp"

namespace {

using json = nlohmann::ordered_json;
using namespace disclab;

constexpr const char* kSchema = "disclab/1";

enum ExitCode : int {
  kOk = 0,
  kAssertionFailed = 1,
  kUsage = 2,
  kBudget = 3,
  kZeroHit = 4,
  kChainFailure = 5,
};

std::string dbl(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

struct GridSpec {
  double a = 0.0, b = 0.0, step = 0.0;
  std::vector<double> expand() const {
    if (!(step > 0.0) || b < a)
      throw CLI::ValidationError("--grid", "need a:b:step with step > 0, b >= a");
    std::vector<double> g;
    for (long i = 0;; ++i) {
      const double x = a + step * static_cast<double>(i);
      if (x > b + 1e-12 * std::max(1.0, std::abs(b))) break;
      g.push_back(x);
    }
    return g;
  }
};

GridSpec parse_grid(const std::string& s) {
  GridSpec g;
  char c1 = 0, c2 = 0;
  std::istringstream in(s);
  in >> g.a >> c1 >> g.b >> c2 >> g.step;
  if (in.fail() || c1 != ':' || c2 != ':')
    throw CLI::ValidationError("--grid", "expected a:b:step");
  return g;
}

json mc_json(const McEstimate& e) {
  json j;
  j["mean"] = e.mean;
  j["stderr"] = e.stderr_;
  j["n"] = e.n_samples;
  if (e.zero_hit) j["zero_hit"] = true;
  if (e.rare_event_warn) j["rare_event_warn"] = true;
  return j;
}

json diag_json(const coulomb::ChainDiagnostics& d) {
  json j;
  j["acceptance"] = d.acceptance;
  j["proposal_stddev"] = d.sigma;
  j["autocorr_time"] = d.autocorr_time;
  j["max_logdens_drift"] = d.max_logdens_drift;
  j["converged"] = d.converged;
  j["seed"] = d.seed;
  j["n_chains"] = d.n_chains;
  j["kept_states"] = d.kept_states;
  return j;
}

// A plot-ready table rendered either as CSV lines or as a JSON body,
// depending on --format.
struct Table {
  std::vector<std::string> columns;
  std::vector<json> rows;  // each row is a json array
};

std::string csv_cell(const json& v) {
  if (v.is_number_integer()) return std::to_string(v.get<long>());
  if (v.is_string()) return v.get<std::string>();
  return dbl(v.get<double>());
}

// Buffers one output artifact, then writes it to --out (with a manifest
// sidecar) or stdout. The metadata line makes every artifact self-describing.
class Artifact {
 public:
  Artifact(std::string command, json params, std::string out_path, bool has_seed,
           std::uint64_t seed)
      : command_(std::move(command)),
        out_path_(std::move(out_path)),
        start_(std::chrono::steady_clock::now()) {
    meta_["schema"] = kSchema;
    meta_["command"] = command_;
    meta_["params"] = std::move(params);
    if (has_seed)
      meta_["seed"] = seed;
    else
      meta_["seed"] = nullptr;
  }

  void extend_meta(const std::string& key, json value) { meta_[key] = std::move(value); }
  void line(const std::string& s) { body_ += s + "\n"; }
  void json_body(const json& j) { body_ = j.dump(2) + "\n"; }

  void flush() {
    const std::string text = "# " + meta_.dump() + "\n" + body_;
    if (out_path_.empty()) {
      std::fwrite(text.data(), 1, text.size(), stdout);
      return;
    }
    std::ofstream f(out_path_, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open output path " + out_path_);
    f << text;
    f.close();
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                        std::chrono::steady_clock::now() - start_)
                        .count();
    json man;
    man["schema"] = kSchema;
    man["command"] = command_;
    man["meta"] = meta_;
    man["wall_time_ms"] = ms;
    man["artifact"] = out_path_;
    man["checksum_fnv1a64"] = hex64(fnv1a64(text));
    std::ofstream mf(out_path_ + ".manifest.json", std::ios::binary);
    mf << man.dump(2) << "\n";
  }

 private:
  std::string command_;
  std::string out_path_;
  json meta_;
  std::string body_;
  std::chrono::steady_clock::time_point start_;
};

void emit_table(Artifact& art, const Table& t, const std::string& format) {
  if (format == "json") {
    json j;
    j["columns"] = t.columns;
    j["rows"] = t.rows;
    art.json_body(j);
    return;
  }
  std::string header;
  for (const auto& c : t.columns) header += (header.empty() ? "" : ",") + c;
  art.line(header);
  for (const auto& row : t.rows) {
    std::string line;
    for (const auto& v : row) line += (line.empty() ? "" : ",") + csv_cell(v);
    art.line(line);
  }
}

std::string checked_format(const std::string& format) {
  if (format != "csv" && format != "json")
    throw CLI::ValidationError("--format", "expected csv or json");
  return format;
}

int cmd_phase(const std::string& grid_s, int workers, const std::string& format,
              const std::string& out) {
  const auto grid = parse_grid(grid_s).expand();
  json params;
  params["grid"] = grid_s;
  params["format"] = format;
  Artifact art("phase", params, out, false, 0);
  const auto rows = phase::phase_table(grid, workers);
  const auto [klo, khi] = phase::crossing_tau1_tauf();
  art.extend_meta("crossing_tau1_tauf", json::array({klo, khi}));
  art.extend_meta("rows", static_cast<long>(rows.size()));
  Table t;
  t.columns = {"kappa", "tau1", "bartau", "tau2", "tau_f", "eta_star", "delta_star"};
  for (const auto& r : rows)
    t.rows.push_back(json::array({r.kappa, r.tau1, r.bartau, r.tau2, r.tau_f, r.eta_star,
                                  r.delta_star}));
  emit_table(art, t, format);
  art.flush();
  return kOk;
}

int cmd_rho(double kappa, int points, const std::string& format, const std::string& out) {
  json params;
  params["kappa"] = kappa;
  params["points"] = points;
  params["format"] = format;
  Artifact art("rho", params, out, false, 0);
  Table t;
  t.columns = {"x", "rho"};
  for (int i = 0; i < points; ++i) {
    // interior grid; the density diverges at the edges for kappa < 2
    const double x = -kappa + 2.0 * kappa * (i + 0.5) / points;
    t.rows.push_back(json::array({x, spectra::rho_kappa(kappa, x)}));
  }
  emit_table(art, t, format);
  art.flush();
  return kOk;
}

int cmd_esd(double kappa, int d, const coulomb::ChainConfig& cfg, int bins,
            const std::string& format, const std::string& out) {
  json params;
  params["kappa"] = kappa;
  params["d"] = d;
  params["bins"] = bins;
  params["burn"] = cfg.burn_sweeps;
  params["thin"] = cfg.thin;
  params["kept"] = cfg.kept_states;
  params["chains"] = cfg.n_chains;
  params["format"] = format;
  Artifact art("esd", params, out, true, cfg.seed);
  std::cerr << "esd: running " << cfg.n_chains << " chain(s) at kappa=" << kappa << " d=" << d
            << "\n";
  const auto r = coulomb::conditioned_esd(kappa, d, cfg, bins);
  art.extend_meta("l1_to_rho", r.l1_to_rho);
  art.extend_meta("diagnostics", diag_json(r.diag));
  Table t;
  t.columns = {"bin_left", "bin_right", "density"};
  for (int b = 0; b < r.hist.n_bins(); ++b)
    t.rows.push_back(json::array({r.hist.bin_left(b), r.hist.bin_right(b), r.hist.density(b)}));
  emit_table(art, t, format);
  art.flush();
  if (!r.diag.converged) {
    std::cerr << "esd: acceptance " << r.diag.acceptance << " left the target band\n";
    return kChainFailure;
  }
  return kOk;
}

int cmd_disc(int n, int d, const std::string& grid_s, int instances, std::uint64_t seed,
             int workers, const std::string& fixture, const std::string& format,
             const std::string& out) {
  const auto grid = parse_grid(grid_s).expand();
  std::vector<moments::InstanceResult> results;
  if (!fixture.empty()) {
    // comma-separated matrix fixture files replace the sampled family
    std::vector<randmat::SymMatrix> ws;
    std::istringstream in(fixture);
    for (std::string path; std::getline(in, path, ',');)
      ws.push_back(randmat::load_matrix(path));
    n = static_cast<int>(ws.size());
    d = ws.empty() ? 0 : ws.front().dim();
    instances = 1;
    if (n < 1 || n > moments::kMaxEnumerationN)
      throw budget_error("disc: fixture count outside the enumeration budget");
    results.push_back(moments::exact_instance(ws, grid));
  }
  json params;
  params["n"] = n;
  params["d"] = d;
  params["grid"] = grid_s;
  params["instances"] = instances;
  if (!fixture.empty()) params["fixture"] = fixture;
  params["format"] = format;
  Artifact art("disc", params, out, true, seed);
  if (fixture.empty()) {
    // budget check before dispatching worker threads
    if (n < 1 || n > moments::kMaxEnumerationN)
      throw budget_error("disc: n outside the enumeration budget");
    results.resize(instances);
    parallel_for_indexed(instances, workers, [&](long i) {
      RngStream rng(seed, RngStream::mix_index(0xD15C, static_cast<std::uint64_t>(i)));
      std::vector<randmat::SymMatrix> ws;
      ws.reserve(n);
      for (int j = 0; j < n; ++j) ws.push_back(randmat::sample_goe(d, rng));
      results[i] = moments::exact_instance(ws, grid);
    });
  }
  Table t;
  t.columns = {"instance", "n", "d", "kappa", "Z", "disc"};
  for (std::size_t i = 0; i < results.size(); ++i)
    for (std::size_t g = 0; g < grid.size(); ++g)
      t.rows.push_back(json::array({static_cast<long>(i), n, d, grid[g],
                                    results[i].z_counts[g], results[i].disc}));
  emit_table(art, t, format);
  art.flush();
  return kOk;
}

int cmd_laplace(double c, long n, const std::string& format, const std::string& out) {
  json params;
  params["c"] = c;
  params["n"] = n;
  params["format"] = format;
  Artifact art("laplace", params, out, false, 0);
  const double v = moments::laplace_sum([c](double q) { return 0.5 * c * q * q; }, n);
  if (format == "json")
    art.json_body(json{{"value", v}});
  else
    art.line(dbl(v));
  art.flush();
  return kOk;
}

int cmd_g2(double kappa, int d, double tau, const coulomb::ChainConfig& cfg,
           const std::string& out) {
  json params;
  params["kappa"] = kappa;
  params["d"] = d;
  params["tau"] = tau;
  params["kept"] = cfg.kept_states;
  params["chains"] = cfg.n_chains;
  params["format"] = "json";
  Artifact art("g2", params, out, true, cfg.seed);
  std::cerr << "g2: chain moments at kappa=" << kappa << " d=" << d << "\n";
  const McEstimate est = coulomb::estimate_G20(kappa, d, tau, cfg);
  const double predicted = phase::tau_f(phase::Margin(kappa)) / tau;
  json rep;
  rep["observed"] = mc_json(est);
  rep["predicted"] = predicted;
  rep["rel_err"] =
      predicted != 0.0 ? std::abs(est.mean - predicted) / std::abs(predicted) : NAN;
  rep["pass_15pct"] =
      predicted != 0.0 && std::abs(est.mean - predicted) <= 0.15 * std::abs(predicted);
  art.json_body(rep);
  art.flush();
  return kOk;
}

struct MomentsArgs {
  std::string check;
  double kappa = 1.8, q = 0.0;
  int n = 10, d = 6, instances = 200;
  long samples = 100000;
  std::uint64_t seed = 0;
  int workers = 0;
  coulomb::ChainConfig chain;
};

int cmd_moments(const MomentsArgs& a, const std::string& out) {
  json params;
  params["check"] = a.check;
  params["kappa"] = a.kappa;
  params["n"] = a.n;
  params["d"] = a.d;
  params["q"] = a.q;
  params["instances"] = a.instances;
  params["samples"] = a.samples;
  params["format"] = "json";
  Artifact art("moments", params, out, true, a.seed);
  json rep;
  int code = kOk;
  if (a.check == "first") {
    const auto r =
        moments::first_moment_check(a.kappa, a.n, a.d, a.instances, a.samples, a.seed, a.workers);
    rep["mean_exact_z"] = mc_json(r.mean_exact_z);
    rep["predicted_2n_p"] = mc_json(r.predicted);
    rep["z_score"] = r.z_score;
    rep["pass"] = r.pass;
    if (r.predicted.zero_hit)
      code = kZeroHit;
    else if (!r.pass)
      code = kAssertionFailed;
  } else if (a.check == "ratio") {
    const auto brute =
        moments::second_moment_ratio_bruteforce(a.kappa, a.n, a.d, a.instances, a.seed, a.workers);
    const auto rec = moments::overlap_reconstruction(a.kappa, a.n, a.d, a.samples, 4 * a.samples,
                                                     a.seed + 1, a.workers);
    rep["ratio_bruteforce"] = mc_json(brute);
    rep["ratio_reconstruction"] = mc_json(rec.value);
    rep["p_single"] = mc_json(rec.p_single);
    const double z = z_score(brute, rec.value);
    rep["z_score"] = z;
    const bool pass = std::abs(z) <= 3.0;
    rep["pass"] = pass;
    if (brute.zero_hit || rec.value.zero_hit)
      code = kZeroHit;
    else if (!pass)
      code = kAssertionFailed;
  } else if (a.check == "gd") {
    RngStream rng(a.seed, 0x6D);
    const auto g = moments::estimate_Gd(a.q, a.kappa, a.n, a.d, a.samples, rng);
    rep["g_d"] = mc_json(g);
    if (g.zero_hit) code = kZeroHit;
  } else if (a.check == "varbound") {
    auto cfg = a.chain;
    cfg.seed = a.seed;
    const auto r = moments::variance_bound_check(a.kappa, a.d, cfg);
    rep["var_tr_w"] = r.var_tr_w;
    rep["bound_tr_w"] = r.bound_tr_w;
    rep["var_tr_w2"] = r.var_tr_w2;
    rep["bound_tr_w2"] = r.bound_tr_w2;
    rep["var_tr_wy"] = r.var_tr_wy;
    rep["bound_tr_wy"] = r.bound_tr_wy;
    rep["pass"] = r.pass;
    rep["diagnostics"] = diag_json(r.diag);
    if (!r.diag.converged)
      code = kChainFailure;
    else if (!r.pass)
      code = kAssertionFailed;
  } else if (a.check == "conditioned") {
    auto cfg = a.chain;
    cfg.seed = a.seed;
    const auto m = coulomb::conditioned_moments(a.kappa, a.d, cfg);
    rep["mean_tr_w2"] = mc_json(m.mean_tr_w2);
    rep["mean_lambda_pair"] = mc_json(m.mean_lambda_pair);
    rep["mean_tr_wwp"] = mc_json(m.mean_tr_wwp);
    rep["var_tr_wwp_closed"] = mc_json(m.var_tr_wwp_closed);
    rep["var_tr_wwp_direct"] = mc_json(m.var_tr_wwp_direct);
    rep["diagnostics"] = diag_json(m.diag);
    if (!m.diag.converged) code = kChainFailure;
  } else {
    throw CLI::ValidationError("--check", "unknown check " + a.check);
  }
  art.json_body(rep);
  art.flush();
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"average-case matrix discrepancy laboratory"};
  app.require_subcommand(1);

  std::string out, grid = "0.05:1.99:0.01";
  int workers = 0;
  std::uint64_t seed = 0;
  double kappa = 1.0, tau = 1.0, c = 0.0;
  int d = 100, n = 10, instances = 20, points = 400, bins = 100;
  long n_laplace = 1000;
  coulomb::ChainConfig chain;

  std::string format = "csv";
  auto add_common = [&](CLI::App* sub, bool needs_seed) {
    sub->add_option("--out", out, "output path (default: stdout)");
    sub->add_option("--format", format, "csv | json (reports are always json)");
    sub->add_option("--workers", workers, "worker threads (env DISCLAB_WORKERS as fallback)");
    if (needs_seed)
      sub->add_option("--seed", seed, "master seed (required; no wall-clock default)")
          ->required();
  };
  auto add_chain = [&](CLI::App* sub) {
    sub->add_option("--burn", chain.burn_sweeps, "burn-in sweeps");
    sub->add_option("--thin", chain.thin, "sweeps between kept states");
    sub->add_option("--kept", chain.kept_states, "kept states per chain");
    sub->add_option("--chains", chain.n_chains, "independent chains");
    sub->add_option("--sigma", chain.proposal_stddev, "initial proposal stddev");
  };

  auto* sub_phase = app.add_subcommand("phase", "threshold curves over a kappa grid");
  sub_phase->add_option("--grid", grid, "kappa grid a:b:step");
  add_common(sub_phase, false);

  auto* sub_rho = app.add_subcommand("rho", "constrained equilibrium density table");
  sub_rho->add_option("--kappa", kappa, "margin")->required();
  sub_rho->add_option("--points", points, "table size");
  add_common(sub_rho, false);

  auto* sub_esd = app.add_subcommand("esd", "conditioned eigenvalue histogram via MCMC");
  sub_esd->add_option("--kappa", kappa, "margin")->required();
  sub_esd->add_option("--d", d, "matrix dimension")->required();
  sub_esd->add_option("--bins", bins, "histogram bins");
  add_chain(sub_esd);
  add_common(sub_esd, true);

  auto* sub_disc = app.add_subcommand("disc", "exact signing counts by enumeration");
  sub_disc->add_option("--n", n, "family size (<= 26)")->required();
  sub_disc->add_option("--d", d, "matrix dimension")->required();
  sub_disc->add_option("--grid", grid, "kappa grid a:b:step")->required();
  sub_disc->add_option("--instances", instances, "independent instances");
  std::string fixture;
  sub_disc->add_option("--fixture", fixture, "comma-separated matrix fixture files");
  add_common(sub_disc, true);

  auto* sub_moments = app.add_subcommand("moments", "moment-method reports (JSON)");
  MomentsArgs margs;
  sub_moments->add_option("--check", margs.check, "first | ratio | gd | varbound | conditioned")
      ->required();
  sub_moments->add_option("--kappa", margs.kappa, "margin");
  sub_moments->add_option("--n", margs.n, "family size");
  sub_moments->add_option("--d", margs.d, "matrix dimension");
  sub_moments->add_option("--q", margs.q, "overlap");
  sub_moments->add_option("--instances", margs.instances, "instances");
  sub_moments->add_option("--samples", margs.samples, "MC samples");
  add_chain(sub_moments);
  add_common(sub_moments, true);

  auto* sub_laplace = app.add_subcommand("laplace", "binomial Laplace sum for F = (c/2) q^2");
  sub_laplace->add_option("--c", c, "quadratic coefficient");
  sub_laplace->add_option("--n", n_laplace, "sum length");
  add_common(sub_laplace, false);

  auto* sub_g2 = app.add_subcommand("g2", "second-moment potential curvature at q = 0");
  sub_g2->add_option("--kappa", kappa, "margin")->required();
  sub_g2->add_option("--d", d, "matrix dimension")->required();
  sub_g2->add_option("--tau", tau, "tau = n / d^2")->required();
  add_chain(sub_g2);
  add_common(sub_g2, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (sub_phase->parsed()) return cmd_phase(grid, workers, checked_format(format), out);
    if (sub_rho->parsed()) return cmd_rho(kappa, points, checked_format(format), out);
    if (sub_esd->parsed()) {
      chain.seed = seed;
      chain.workers = workers;
      return cmd_esd(kappa, d, chain, bins, checked_format(format), out);
    }
    if (sub_disc->parsed())
      return cmd_disc(n, d, grid, instances, seed, workers, fixture, checked_format(format), out);
    if (sub_laplace->parsed()) return cmd_laplace(c, n_laplace, checked_format(format), out);
    if (sub_g2->parsed()) {
      chain.seed = seed;
      chain.workers = workers;
      return cmd_g2(kappa, d, tau, chain, out);
    }
    if (sub_moments->parsed()) {
      margs.seed = seed;
      margs.workers = workers;
      margs.chain = chain;
      return cmd_moments(margs, out);
    }
  } catch (const budget_error& e) {
    std::cerr << "budget: " << e.what() << "\n";
    return kBudget;
  } catch (const chain_error& e) {
    std::cerr << "chain: " << e.what() << "\n";
    return kChainFailure;
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kAssertionFailed;
  }
  return kUsage;
}
