#pragma once

// Entry point for the `mel` tool.
//
// Arguments are parsed twice. The first pass finds the subcommand and the
// options given on the command line; config entries that were not given as
// flags are then appended as --key=value tokens and the second pass parses
// the merged set. Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <algorithm>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mel/cli/commands.hpp"
#include "mel/cli/config.hpp"

namespace mel::cli {

struct AllOptions {
  GlobalOptions global;
  PageOptions page;
  DephaseOptions dephase;
  CascadeOptions cascade;
  SchwingerOptions jets;
  SchwingerOptions string;
  EntropyOptions entropy;
  MelCompareOptions mel;
  MutualInfoOptions mutual;
};

namespace detail {

inline void add_schwinger(CLI::App* s, SchwingerOptions& o, bool string_scan) {
  s->add_option("--n-sites", o.n_sites, "Chain length N (even)");
  s->add_option("--a", o.a, "Lattice spacing");
  s->add_option("--g", o.g, "Gauge coupling");
  s->add_option("--mass", o.mass, "Fermion mass");
  s->add_option("--theta", o.theta, "Background field");
  s->add_option("--l-subsystem", o.l_subsystem, "Centered subsystem length L");
  s->add_option("--t-final", o.t_final, "Final time");
  s->add_option("--dt", o.dt, "Time step");
  s->add_option("--beta-grid", o.beta_grid, "lo:hi:count (log-spaced) or a comma list");
  s->add_option("--n-thermal", o.n_thermal, "Auxiliary chain length for thermal references");
  s->add_option("--spectrum-top-k", o.spectrum_top_k, "Eigenvalues kept per charge sector");
  s->add_flag("--thermometry,!--no-thermometry", o.thermometry, "Fit thermal references");
  s->add_flag("--seed-free", o.seed_free, "Deterministic run; no random input is used");
  if (string_scan) s->add_option("--d-grid", o.d_grid, "lo:hi or a comma list of separations");
}

inline void build_app(CLI::App& app, AllOptions& o, bool strict) {
  app.option_defaults()->always_capture_default();
  app.set_help_all_flag("--help-all", "Help for every subcommand");
  app.add_option("--out-dir", o.global.out_dir, "Directory for outputs and manifest.json");
  app.add_option("--config", o.global.config, "Config file of key = value lines");
  app.add_option("--seed", o.global.seed, "Random seed");
  app.add_option("--threads", o.global.threads, "Worker threads for simulations")->check(CLI::PositiveNumber);
  app.add_flag("--bits", o.global.bits, "Report entropies in bits");

  auto* page = app.add_subcommand("page", "Haar-random subsystem entropy against the exact average");
  page->add_option("--m", o.page.m, "Subsystem dimension");
  page->add_option("--n", o.page.n, "Environment dimension");
  page->add_option("--samples", o.page.samples, "Monte Carlo samples");

  auto* deph = app.add_subcommand("dephase", "Drop Fock-space coherences of a density matrix");
  deph->add_option("--input", o.dephase.input, "JSON density matrix")->required(strict);

  auto* cas = app.add_subcommand("cascade", "Dipole cascade multiplicity distribution");
  cas->add_option("--lambda", o.cascade.lambda, "Splitting rate");
  cas->add_option("--y", o.cascade.y, "Rapidity");
  cas->add_option("--y-grid", o.cascade.y_grid, "Rapidity grid: lo:hi:count or a comma list");
  cas->add_option("--trials", o.cascade.trials, "Yule simulation trials (0 to skip)");
  cas->add_option("--dist", o.cascade.dist, "geometric, nb or poisson")
      ->check(CLI::IsMember({"geometric", "nb", "poisson"}));
  cas->add_option("--k", o.cascade.k, "Negative binomial shape");
  cas->add_option("--nbar", o.cascade.nbar, "Mean for nb/poisson (defaults to the cascade mean)");
  cas->add_option("--n-max", o.cascade.n_max, "Explicit truncation");

  add_schwinger(app.add_subcommand("schwinger-jets", "Real-time evolution with receding external charges"), o.jets,
                false);
  add_schwinger(app.add_subcommand("schwinger-string", "Ground states with a static charge pair"), o.string, true);

  auto* ent = app.add_subcommand("entropy", "Entropy of a multiplicity histogram");
  ent->add_option("--input", o.entropy.input, "Histogram CSV (n,p)")->required(strict);

  auto* mel = app.add_subcommand("mel-compare", "Hadron entropy against ln of a structure function");
  mel->add_option("--hist", o.mel.histograms, "Histogram CSVs")->delimiter(',')->required(strict);
  mel->add_option("--table", o.mel.table, "Structure-function CSV")->required(strict);
  mel->add_option("--kind", o.mel.kind, "gluon_xG, F2, diffractive_pdf or fragmentation")
      ->check(CLI::IsMember({"gluon_xG", "F2", "diffractive_pdf", "fragmentation"}));
  mel->add_option("--tolerance", o.mel.tolerance, "Relative kinematic matching tolerance");

  auto* mi = app.add_subcommand("mutual-info", "Mutual information of a joint multiplicity distribution");
  mi->add_option("--input", o.mutual.input, "Joint CSV (n1,n2,p)")->required(strict);

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();
}

inline std::string joined_results(const CLI::Option* opt) {
  std::string out;
  for (const auto& r : opt->results()) {
    if (!out.empty()) out += ",";
    out += r;
  }
  return out;
}

inline CLI::App* chosen(CLI::App& app) {
  const auto subs = app.get_subcommands();
  return subs.empty() ? nullptr : subs.front();
}

inline CLI::Option* find_option(CLI::App& app, CLI::App* sub, const std::string& key) {
  const std::string name = "--" + key;
  if (auto* o = sub->get_option_no_throw(name)) return o;
  return app.get_option_no_throw(name);
}

/// CLI11 wants arguments in reverse order.
inline void parse_tokens(CLI::App& app, std::vector<std::string> tokens) {
  std::reverse(tokens.begin(), tokens.end());
  app.parse(tokens);
}

inline std::string config_path(const std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  return path;
}

struct UsageError : ArgumentError {
  using ArgumentError::ArgumentError;
};

}  // namespace detail

inline int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const std::string program = "mel";
  try {
    AllOptions first_opts;
    CLI::App first("Maximal entanglement numerical laboratory", program);
    detail::build_app(first, first_opts, false);
    try {
      detail::parse_tokens(first, args);
    } catch (const CLI::CallForHelp&) {
      out << first.help();
      return 0;
    } catch (const CLI::CallForAllHelp&) {
      out << first.help("", CLI::AppFormatMode::All);
      return 0;
    } catch (const CLI::ParseError& e) {
      err << program << ": " << e.what() << "\n";
      return 2;
    }
    CLI::App* sub = detail::chosen(first);
    if (!sub) {
      err << first.help();
      return 2;
    }

    RunManifest manifest;
    manifest.started = utc_timestamp();
    manifest.subcommand = sub->get_name();
    std::vector<std::string> merged = args;
    std::map<std::string, std::string> from_config;
    const std::string cfg_path = detail::config_path(args);
    if (!cfg_path.empty()) {
      manifest.config_file = cfg_path;
      for (const auto& e : load_config(cfg_path)) {
        CLI::Option* opt = detail::find_option(first, sub, e.key);
        if (!opt || e.key == "config" || e.key == "help")
          throw detail::UsageError(cfg_path + ": line " + std::to_string(e.line) + ": unknown key '" + e.key +
                                   "' for subcommand " + sub->get_name());
        if (opt->count() > 0) {
          manifest.overridden[e.key] = {e.value, detail::joined_results(opt)};
          continue;
        }
        merged.push_back("--" + e.key + "=" + e.value);
        from_config[e.key] = e.value;
      }
    }

    AllOptions o;
    CLI::App app("Maximal entanglement numerical laboratory", program);
    detail::build_app(app, o, true);
    try {
      detail::parse_tokens(app, merged);
    } catch (const CLI::ParseError& e) {
      err << program << ": " << e.what() << "\n";
      return 2;
    }
    sub = detail::chosen(app);

    auto record = [&](const CLI::Option* opt) {
      const auto& names = opt->get_lnames();
      if (names.empty() || names.front() == "help" || names.front() == "help-all") return;
      const std::string key = names.front();
      std::string value = opt->count() > 0 ? detail::joined_results(opt) : opt->get_default_str();
      if (value.empty() && opt->get_expected_min() == 0) value = "false";
      manifest.parameters[key] = value;
      manifest.parameter_sources[key] =
          from_config.count(key) ? "config" : (opt->count() > 0 ? "flag" : "default");
    };
    for (const auto* opt : app.get_options()) record(opt);
    for (const auto* opt : sub->get_options()) record(opt);
    manifest.seed = o.global.seed;

    OutputSink sink(o.global.out_dir, manifest);
    RunContext ctx{o.global, manifest, sink};
    const std::string name = sub->get_name();
    if (name == "page") run_page(o.page, ctx);
    else if (name == "dephase") run_dephase(o.dephase, ctx);
    else if (name == "cascade") run_cascade(o.cascade, ctx);
    else if (name == "schwinger-jets") run_schwinger_jets(o.jets, ctx);
    else if (name == "schwinger-string") run_schwinger_string(o.string, ctx);
    else if (name == "entropy") run_entropy(o.entropy, ctx);
    else if (name == "mel-compare") run_mel_compare(o.mel, ctx);
    else if (name == "mutual-info") run_mutual_info(o.mutual, ctx);
    sink.finish();
    out << "wrote " << manifest.outputs.size() << " output(s) and manifest.json to " << sink.dir().string() << "\n";
    return 0;
  } catch (const ArgumentError& e) {
    err << program << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << program << ": " << e.what() << "\n";
    return 1;
  }
}

inline int dispatch(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return dispatch(args, out, err);
}

}  // namespace mel::cli
