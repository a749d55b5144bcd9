#pragma once

// Subcommand bodies. Each reads its typed options, writes its outputs
// through the sink and records input digests in the manifest.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mel/cli/config.hpp"
#include "mel/cli/manifest.hpp"
#include "mel/dipole_cascade.hpp"
#include "mel/entropy_analysis.hpp"
#include "mel/fock_dephasing.hpp"
#include "mel/io/json.hpp"
#include "mel/schwinger/thermal.hpp"
#include "mel/typicality.hpp"

namespace mel::cli {

struct GlobalOptions {
  std::string out_dir = ".";
  std::string config;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool bits = false;
};

struct RunContext {
  const GlobalOptions& global;
  RunManifest& manifest;
  OutputSink& sink;

  /// Entropies are computed in nats; --bits converts on output.
  double entropy(double nats) const { return global.bits ? nats / std::numbers::ln2 : nats; }
  const char* unit() const { return global.bits ? "bits" : "nats"; }
};

inline std::string read_input(const std::string& path, RunContext& ctx) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open input '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  ctx.manifest.input_digests[path] = analysis::digest(ss.str());
  return ss.str();
}

// Grid syntax: comma-separated values, or lo:hi:count (log-spaced for beta,
// linear for y), or lo:hi (inclusive integer range for separations).

inline std::vector<double> parse_real_list(const std::string& s, const char* what) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto t = trim(item);
    if (t.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(std::string(t), &used));
      if (used != t.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ArgumentError(std::string(what) + ": cannot parse '" + std::string(t) + "'");
    }
  }
  if (out.empty()) throw ArgumentError(std::string(what) + ": empty list");
  return out;
}

inline std::optional<std::vector<double>> parse_range(const std::string& s, const char* what) {
  if (s.find(':') == std::string::npos) return std::nullopt;
  std::string tmp = s;
  std::replace(tmp.begin(), tmp.end(), ':', ',');
  return parse_real_list(tmp, what);
}

inline std::vector<double> parse_beta_grid(const std::string& s) {
  if (s.empty()) return schwinger::default_beta_grid();
  if (auto r = parse_range(s, "beta-grid")) {
    if (r->size() != 3 || (*r)[2] < 2 || (*r)[0] <= 0) throw ArgumentError("beta-grid: expected lo:hi:count");
    return schwinger::default_beta_grid(static_cast<std::size_t>((*r)[2]), (*r)[0], (*r)[1]);
  }
  return parse_real_list(s, "beta-grid");
}

inline std::vector<double> parse_y_grid(const std::string& s) {
  if (auto r = parse_range(s, "y-grid")) {
    if (r->size() != 3 || (*r)[2] < 2) throw ArgumentError("y-grid: expected lo:hi:count");
    const auto n = static_cast<std::size_t>((*r)[2]);
    std::vector<double> g(n);
    for (std::size_t i = 0; i < n; ++i) g[i] = (*r)[0] + ((*r)[1] - (*r)[0]) * static_cast<double>(i) / static_cast<double>(n - 1);
    return g;
  }
  return parse_real_list(s, "y-grid");
}

inline std::vector<int> parse_d_grid(const std::string& s, int n_sites) {
  std::vector<int> out;
  if (s.empty()) {
    for (int d = 0; d < n_sites; ++d) out.push_back(d);
    return out;
  }
  if (auto r = parse_range(s, "d-grid")) {
    if (r->size() != 2) throw ArgumentError("d-grid: expected lo:hi");
    for (int d = static_cast<int>((*r)[0]); d <= static_cast<int>((*r)[1]); ++d) out.push_back(d);
    return out;
  }
  for (double v : parse_real_list(s, "d-grid")) out.push_back(static_cast<int>(v));
  return out;
}

// --- page -----------------------------------------------------------------

struct PageOptions {
  std::size_t m = 2;
  std::size_t n = 8;
  std::size_t samples = 2000;
};

inline void run_page(const PageOptions& o, RunContext& ctx) {
  const double exact = page_entropy_exact(o.m, o.n);
  const double asym = page_entropy_asymptotic(o.m, o.n);
  HaarSampler sampler(o.m, o.n, ctx.global.seed);
  const MonteCarloEstimate mc = monte_carlo_page(sampler, o.samples);
  io::Json j;
  j["m"] = o.m;
  j["n"] = o.n;
  j["exact"] = ctx.entropy(exact);
  j["asymptotic"] = ctx.entropy(asym);
  j["mc_mean"] = ctx.entropy(mc.mean);
  j["mc_stderr"] = ctx.entropy(mc.standard_error);
  j["samples"] = o.samples;
  j["seed"] = ctx.global.seed;
  j["unit"] = ctx.unit();
  ctx.sink.write_json("page.json", j);
}

// --- dephase --------------------------------------------------------------

struct DephaseOptions {
  std::string input;
};

inline void run_dephase(const DephaseOptions& o, RunContext& ctx) {
  const std::string text = read_input(o.input, ctx);
  io::Json in;
  try {
    in = io::Json::parse(text);
  } catch (const io::Json::parse_error& e) {
    throw ValidationError("dephase: input is not valid JSON: " + std::string(e.what()));
  }
  const FockDensityMatrix rho(io::matrix_from_json(in));
  const FockDensityMatrix out = dephase(rho);
  const EntropyGain g = dephasing_entropy_gain(rho);
  io::Json j;
  j["cutoff"] = rho.cutoff();
  j["dephased"] = io::to_json(out.matrix());
  j["before"] = ctx.entropy(g.before);
  j["after"] = ctx.entropy(g.after);
  j["unit"] = ctx.unit();
  ctx.sink.write_json("dephase.json", j);
}

// --- cascade --------------------------------------------------------------

struct CascadeOptions {
  double lambda = 1.0;
  std::optional<double> y;
  std::string y_grid;
  std::uint64_t trials = 0;
  std::string dist = "geometric";
  double k = 1.0;
  std::optional<double> nbar;
  std::optional<int> n_max;
};

namespace detail {

/// NB / Poisson truncated where the remaining tail drops below 1e-12.
template <class Make>
cascade::MultiplicityDistribution grow_until_tail(Make make, int start) {
  for (int n = start;; n *= 2) {
    auto d = make(n);
    if (d.tail_mass < 1e-12) return d;
    if (n > cascade::kMaxTerms) throw CapabilityError("distribution needs more than 10^6 terms");
  }
}

}  // namespace detail

inline void run_cascade(const CascadeOptions& o, RunContext& ctx) {
  std::vector<double> ys;
  if (!o.y_grid.empty()) ys = parse_y_grid(o.y_grid);
  if (!o.y && ys.empty()) throw ArgumentError("cascade: one of --y or --y-grid is required");
  const double y = o.y ? *o.y : ys.back();
  const cascade::CascadeParams params{o.lambda, y};
  params.validate();
  const double a = params.mean_multiplicity();
  const double nbar = o.nbar.value_or(a);

  cascade::MultiplicityDistribution d;
  if (o.dist == "geometric") {
    d = o.n_max ? cascade::geometric_distribution(params, *o.n_max) : cascade::geometric_distribution_adaptive(params);
  } else if (o.dist == "nb") {
    auto make = [&](int n) { return cascade::negative_binomial(o.k, nbar, n); };
    d = o.n_max ? make(*o.n_max) : detail::grow_until_tail(make, std::max(16, static_cast<int>(4 * nbar)));
  } else if (o.dist == "poisson") {
    auto make = [&](int n) { return cascade::poisson_distribution(nbar, n); };
    d = o.n_max ? make(*o.n_max) : detail::grow_until_tail(make, std::max(16, static_cast<int>(4 * nbar)));
  } else {
    throw ArgumentError("cascade: --dist must be geometric, nb or poisson");
  }

  std::optional<cascade::YuleSimulation> sim;
  if (o.trials > 0) sim = cascade::simulate_yule(params, o.trials, ctx.global.seed, ctx.global.threads);

  std::ostringstream csv;
  csv << "n,prob,empirical_prob\n";
  const int n_hi = std::max(d.n_max(), sim ? sim->max_n : 0);
  for (int n = d.support_start; n <= n_hi; ++n) {
    csv << n << "," << io::number(d.prob(n)) << ",";
    if (sim) csv << io::number(sim->empirical.prob(n));
    csv << "\n";
  }
  ctx.sink.write("cascade.csv", csv.str());

  io::Json j;
  j["dist"] = o.dist;
  j["lambda"] = o.lambda;
  j["y"] = y;
  j["support_start"] = d.support_start;
  j["n_max"] = d.n_max();
  j["tail_mass"] = d.tail_mass;
  j["mean"] = d.mean;
  j["variance"] = d.variance;
  j["entropy"] = ctx.entropy(d.entropy_nats);
  j["unit"] = ctx.unit();
  j["cumulants"] = d.tail_mass < 1e-10 ? io::Json(cascade::cumulants(d)) : io::Json(nullptr);
  if (sim) {
    const auto chi = cascade::yule_chi_square(*sim, params);
    j["simulation"] = {{"trials", sim->trials},
                       {"mean", sim->mean},
                       {"standard_error", sim->standard_error},
                       {"analytic_mean", a},
                       {"chi_square", chi.statistic},
                       {"chi_square_dof", chi.dof},
                       {"chi_square_p", chi.p_value},
                       {"ks_statistic", cascade::yule_ks_statistic(*sim, params)}};
  }
  if (ys.size() >= 3) {
    const auto scan = cascade::entropy_vs_rapidity(o.lambda, ys);
    std::ostringstream rs;
    rs << "y,entropy,log_mean\n";
    for (const auto& p : scan.points)
      rs << io::number(p.y) << "," << io::number(ctx.entropy(p.entropy)) << "," << io::number(p.log_mean) << "\n";
    ctx.sink.write("cascade_rapidity.csv", rs.str());
    j["slope_fit"] = {{"slope", ctx.entropy(scan.slope)},
                      {"intercept", ctx.entropy(scan.intercept)},
                      {"fit_min_lambda_y", scan.fit_min},
                      {"points", scan.fit_points}};
  } else if (!ys.empty()) {
    throw ArgumentError("cascade: --y-grid needs at least three points");
  } else {
    j["slope_fit"] = nullptr;
  }
  ctx.sink.write_json("cascade.json", j);
}

// --- schwinger ------------------------------------------------------------

struct SchwingerOptions {
  int n_sites = 14;
  double a = 1.0;
  double g = 0.5;
  double mass = 0.25;
  double theta = 0.0;
  int l_subsystem = 4;
  double t_final = 6.0;
  double dt = 0.2;
  std::string d_grid;
  std::string beta_grid;
  std::optional<int> n_thermal;
  bool seed_free = true;
  int spectrum_top_k = 10;
  bool thermometry = true;
};

namespace detail {

inline schwinger::LatticeModel model_of(const SchwingerOptions& o) {
  schwinger::LatticeModel m;
  m.n_sites = o.n_sites;
  m.spacing = o.a;
  m.coupling = o.g;
  m.fermion_mass = o.mass;
  m.theta_background = o.theta;
  m.validate();
  return m;
}

/// Default auxiliary chain: 12 sites when the staggering lines up with the
/// simulated chain, otherwise 10.
inline int default_n_thermal(int n_sites) { return (n_sites / 2) % 2 == 0 ? 12 : 10; }

inline schwinger::ThermalReference reference_of(const SchwingerOptions& o) {
  schwinger::ThermalReference r;
  r.n_thermal = o.n_thermal.value_or(default_n_thermal(o.n_sites));
  r.beta_grid = parse_beta_grid(o.beta_grid);
  r.subsystem_length = o.l_subsystem;
  r.validate();
  r.check_sublattice(o.n_sites);
  return r;
}

inline void spectrum_rows(std::ostringstream& os, double label, const EntanglementReport& rep, int top_k) {
  if (!rep.sector_spectra) return;
  for (const auto& [q, ev] : *rep.sector_spectra)
    for (std::size_t r = 0; r < ev.size() && static_cast<int>(r) < top_k; ++r)
      os << io::number(label) << "," << q << "," << r << "," << io::number(ev[r]) << "\n";
}

inline void observable_rows(std::ostringstream& os, double label, const schwinger::LocalObservables& ob) {
  for (std::size_t s = 0; s < ob.charge_density.size(); ++s) {
    os << io::number(label) << "," << s << "," << io::number(ob.chiral_condensate[s]) << ","
       << io::number(ob.charge_density[s]) << ",";
    if (s < ob.electric_field.size()) os << io::number(ob.electric_field[s]);
    os << "," << io::number(ob.energy_density[s]) << "\n";
  }
}

inline const char* kThermoHeader =
    "best_beta_overlap,best_beta_hs,refined_beta_overlap,refined_beta_hs,overlap_at_max,hs_complement_at_max,"
    "purity_ratio,overlap_edge,hs_edge,temperature_overlap_ms";

inline void thermo_cells(std::ostringstream& os, const schwinger::ThermometryPoint& p, double meson_mass) {
  os << io::number(p.best_beta_overlap) << "," << io::number(p.best_beta_hs) << "," << io::number(p.refined_beta_overlap)
     << "," << io::number(p.refined_beta_hs) << "," << io::number(p.overlap_at_max) << ","
     << io::number(p.hs_complement_at_max) << "," << io::number(p.purity_ratio) << "," << (p.overlap_edge ? 1 : 0)
     << "," << (p.hs_edge ? 1 : 0) << "," << io::number(1.0 / (p.refined_beta_overlap * meson_mass));
}

inline io::Json model_json(const schwinger::LatticeModel& m, double meson_mass) {
  return {{"n_sites", m.n_sites},   {"spacing", m.spacing}, {"coupling", m.coupling},
          {"fermion_mass", m.fermion_mass}, {"theta_background", m.theta_background}, {"meson_mass", meson_mass}};
}

}  // namespace detail

inline void run_schwinger_jets(const SchwingerOptions& o, RunContext& ctx) {
  using namespace schwinger;
  const LatticeModel model = detail::model_of(o);
  check_subsystem_length(model, o.l_subsystem);
  const double ms = meson_mass(model);
  std::optional<ThermalReferenceSet> refs;
  if (o.thermometry) refs.emplace(detail::reference_of(o), model);
  const GroundState gs = ground_state(model);
  const auto track = ExternalChargeTrack::jets();

  std::ostringstream series, spectrum, obs;
  series << "t,t_ms,entropy,renyi2,schmidt_count,total_energy,total_charge";
  if (refs) series << "," << detail::kThermoHeader;
  series << "\n";
  spectrum << "t,sector,rank,eigenvalue\n";
  obs << "t,site,chiral_condensate,charge_density,electric_field,energy_density\n";
  double max_norm_error = 0.0;
  evolve(gs.state, track, o.t_final, o.dt, [&](double t, const SectorState& s) {
    max_norm_error = std::max(max_norm_error, std::abs(s.norm() - 1.0));
    const EntanglementReport rep = centered_subsystem_report(s, o.l_subsystem);
    const LocalObservables ob = local_observables(s, track, t);
    std::size_t count = 0;
    for (double v : rep.schmidt_eigenvalues) count += v > 1e-6;
    series << io::number(t) << "," << io::number(t * ms) << "," << io::number(ctx.entropy(rep.von_neumann)) << ","
           << io::number(ctx.entropy(rep.renyi.at(2.0))) << "," << count << "," << io::number(ob.total_energy) << ","
           << io::number(ob.total_charge);
    if (refs) {
      series << ",";
      detail::thermo_cells(series, thermometry_point(centered_density_matrix(s, o.l_subsystem), *refs, t), ms);
    }
    series << "\n";
    detail::spectrum_rows(spectrum, t, rep, o.spectrum_top_k);
    detail::observable_rows(obs, t, ob);
  });
  ctx.sink.write("jets_series.csv", series.str());
  ctx.sink.write("jets_spectrum.csv", spectrum.str());
  ctx.sink.write("jets_observables.csv", obs.str());
  io::Json j;
  j["model"] = detail::model_json(model, ms);
  j["subsystem_length"] = o.l_subsystem;
  j["crossing_time"] = 0.5 * o.l_subsystem * model.spacing;
  j["t_final"] = o.t_final;
  j["dt"] = o.dt;
  j["ground_energy"] = gs.energy;
  j["max_norm_error"] = max_norm_error;
  j["n_thermal"] = refs ? io::Json(refs->reference().n_thermal) : io::Json(nullptr);
  j["unit"] = ctx.unit();
  ctx.sink.write_json("jets.json", j);
}

inline void run_schwinger_string(const SchwingerOptions& o, RunContext& ctx) {
  using namespace schwinger;
  const LatticeModel model = detail::model_of(o);
  check_subsystem_length(model, o.l_subsystem);
  const double ms = meson_mass(model);
  std::optional<ThermalReferenceSet> refs;
  if (o.thermometry) refs.emplace(detail::reference_of(o), model);
  const auto ds = parse_d_grid(o.d_grid, model.n_sites);

  std::ostringstream series, spectrum, obs;
  series << "d,d_ms,energy,half_chain_entropy,centered_entropy";
  if (refs) series << "," << detail::kThermoHeader;
  series << "\n";
  spectrum << "d,sector,rank,eigenvalue\n";
  obs << "d,site,chiral_condensate,charge_density,electric_field,energy_density\n";
  for (int d : ds) {
    const auto track = ExternalChargeTrack::static_pair(d);
    track.validate(model);
    const GroundState gs = ground_state(model, track);
    const EntanglementReport half = half_chain_report(gs.state);
    const EntanglementReport cen = centered_subsystem_report(gs.state, o.l_subsystem);
    const double label = d;
    series << d << "," << io::number(d * model.spacing * ms) << "," << io::number(gs.energy) << ","
           << io::number(ctx.entropy(half.von_neumann)) << "," << io::number(ctx.entropy(cen.von_neumann));
    if (refs) {
      series << ",";
      detail::thermo_cells(series, thermometry_point(centered_density_matrix(gs.state, o.l_subsystem), *refs, label), ms);
    }
    series << "\n";
    detail::spectrum_rows(spectrum, label, cen, o.spectrum_top_k);
    detail::observable_rows(obs, label, local_observables(gs.state, track, 0.0));
  }
  ctx.sink.write("string_series.csv", series.str());
  ctx.sink.write("string_spectrum.csv", spectrum.str());
  ctx.sink.write("string_observables.csv", obs.str());
  io::Json j;
  j["model"] = detail::model_json(model, ms);
  j["subsystem_length"] = o.l_subsystem;
  j["separations"] = ds;
  j["n_thermal"] = refs ? io::Json(refs->reference().n_thermal) : io::Json(nullptr);
  j["unit"] = ctx.unit();
  ctx.sink.write_json("string.json", j);
}

// --- entropy analysis -----------------------------------------------------

inline io::Json provenance_json(const analysis::Provenance& p) {
  return {{"input_digest", p.input_digest}, {"normalization_sum", p.normalization_sum}, {"tool_version", MEL_VERSION}};
}

struct EntropyOptions {
  std::string input;
};

inline void run_entropy(const EntropyOptions& o, RunContext& ctx) {
  std::istringstream in(read_input(o.input, ctx));
  const auto h = analysis::ingest_histogram(in);
  const auto e = analysis::hadron_entropy(h);
  io::Json j;
  j["label"] = h.label();
  j["entries"] = h.entries().size();
  j["mean"] = h.mean();
  j["entropy"] = ctx.entropy(e.entropy);
  j["geometric_reference"] = ctx.entropy(e.geometric_reference);
  j["unit"] = ctx.unit();
  j["provenance"] = provenance_json(h.provenance());
  ctx.sink.write_json("entropy.json", j);
}

struct MelCompareOptions {
  std::vector<std::string> histograms;
  std::string table;
  std::string kind = "gluon_xG";
  double tolerance = 1e-6;
};

inline void run_mel_compare(const MelCompareOptions& o, RunContext& ctx) {
  if (o.histograms.empty()) throw ArgumentError("mel-compare: at least one --hist is required");
  std::vector<analysis::MultiplicityHistogram> hists;
  io::Json hprov = io::Json::array();
  for (const auto& path : o.histograms) {
    std::istringstream in(read_input(path, ctx));
    auto h = analysis::ingest_histogram(in);
    hprov.push_back({{"path", path},
                     {"input_digest", h.provenance().input_digest},
                     {"normalization_sum", h.provenance().normalization_sum}});
    if (h.label().empty()) h = analysis::MultiplicityHistogram(h.entries(), path, h.kinematics());
    hists.push_back(std::move(h));
  }
  std::istringstream tin(read_input(o.table, ctx));
  const auto table = analysis::ingest_structure(tin, analysis::structure_kind_from_string(o.kind));
  const auto cmp = analysis::mel_compare(hists, table, o.tolerance);

  std::ostringstream csv;
  csv << "label,x,q2,hadron_entropy,log_value,residual\n";
  for (const auto& p : cmp.points)
    csv << p.label << "," << io::number(p.x) << "," << io::number(p.q2) << "," << io::number(ctx.entropy(p.hadron_entropy))
        << "," << io::number(ctx.entropy(p.log_value)) << "," << io::number(ctx.entropy(p.residual)) << "\n";
  ctx.sink.write("mel_compare.csv", csv.str());
  io::Json j;
  j["kind"] = o.kind;
  j["points"] = cmp.points.size();
  j["offset"] = ctx.entropy(cmp.offset);
  j["residual_std"] = ctx.entropy(cmp.residual_std);
  io::Json sk = io::Json::array();
  for (const auto& s : cmp.skipped) sk.push_back({{"label", s.label}, {"reason", s.reason}});
  j["skipped"] = std::move(sk);
  j["unit"] = ctx.unit();
  j["provenance"] = {{"histograms", hprov}, {"table", provenance_json(table.provenance())}};
  ctx.sink.write_json("mel_compare.json", j);
}

struct MutualInfoOptions {
  std::string input;
};

inline void run_mutual_info(const MutualInfoOptions& o, RunContext& ctx) {
  std::istringstream in(read_input(o.input, ctx));
  const auto joint = analysis::ingest_joint(in);
  const auto mi = analysis::mutual_information(joint);
  io::Json j;
  j["mutual_information"] = ctx.entropy(mi.value);
  j["via_entropies"] = ctx.entropy(mi.via_entropies);
  j["s1"] = ctx.entropy(mi.s1);
  j["s2"] = ctx.entropy(mi.s2);
  j["s12"] = ctx.entropy(mi.s12);
  j["unit"] = ctx.unit();
  j["provenance"] = provenance_json(joint.provenance());
  ctx.sink.write_json("mutual_info.json", j);
}

}  // namespace mel::cli
