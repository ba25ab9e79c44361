#include "app.hpp"

#include <CLI11.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "crm/fk_sampler.hpp"
#include "crm/levy_core.hpp"
#include "crm/mixture_demo.hpp"
#include "crm/moments.hpp"
#include "crm/parallel.hpp"
#include "crm/posterior_ibp.hpp"
#include "crm/posterior_nrmi.hpp"
#include "crm/random.hpp"
#include "crm/tail_bounds.hpp"

#ifndef CRM_FK_VERSION
#define CRM_FK_VERSION "unknown"
#endif
#ifndef CRM_FK_DATA_DIR
#define CRM_FK_DATA_DIR "data"
#endif

namespace crm::app {
namespace {

using Values = std::map<std::string, std::string>;
using json = nlohmann::json;

struct Option {
  std::string key;
  std::string default_value;
  std::string help;
};

struct Outcome {
  std::string body;
  json results = json::object();
};

struct Command {
  std::string name;
  std::string help;
  std::vector<Option> options;
  std::function<Outcome(const Values&)> run;
};

// ---------------------------------------------------------------------------
// Value parsing. Bad values are usage errors.

std::string get(const Values& v, const std::string& key) {
  auto it = v.find(key);
  require(it != v.end(), "missing option --" + key);
  return it->second;
}

double get_double(const Values& v, const std::string& key) {
  const std::string s = get(v, key);
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  require(pos == s.size() && !s.empty(), "--" + key + ": not a number: '" + s + "'");
  return x;
}

std::uint64_t get_u64(const Values& v, const std::string& key) {
  const std::string s = get(v, key);
  std::size_t pos = 0;
  unsigned long long x = 0;
  try {
    if (!s.empty() && s[0] != '-') x = std::stoull(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  require(pos == s.size() && !s.empty(), "--" + key + ": not a non-negative integer: '" + s + "'");
  return x;
}

std::size_t get_size(const Values& v, const std::string& key) { return static_cast<std::size_t>(get_u64(v, key)); }

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(item);
  return out;
}

std::vector<double> get_doubles(const Values& v, const std::string& key) {
  std::vector<double> out;
  for (const auto& item : split(get(v, key), ',')) {
    out.push_back(get_double({{key, item}}, key));
  }
  require(!out.empty(), "--" + key + ": empty list");
  return out;
}

std::vector<std::size_t> get_sizes(const std::string& list, const std::string& key) {
  std::vector<std::size_t> out;
  for (const auto& item : split(list, ',')) out.push_back(get_size({{key, item}}, key));
  require(!out.empty(), "--" + key + ": empty list");
  return out;
}

/// "lo:hi:n" -> n midpoints of equal cells of (lo, hi).
std::vector<double> get_range(const std::string& text, const std::string& key) {
  const auto parts = split(text, ':');
  require(parts.size() == 3, "--" + key + ": expected lo:hi:n, got '" + text + "'");
  const double lo = get_double({{key, parts[0]}}, key);
  const double hi = get_double({{key, parts[1]}}, key);
  const std::size_t n = get_size({{key, parts[2]}}, key);
  require(hi > lo && n >= 1, "--" + key + ": need hi > lo and n >= 1");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = lo + (hi - lo) * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
  return out;
}

bool json_format(const Values& v) {
  const std::string f = get(v, "format");
  require(f == "csv" || f == "json", "--format must be csv or json");
  return f == "json";
}

std::size_t threads_of(const Values& v) {
  const std::size_t t = get_size(v, "threads");
  return t == 0 ? default_thread_count() : t;
}

std::string fmt(double x) { return format_double(x); }

// ---------------------------------------------------------------------------
// Shared option groups

const std::vector<Option> kSpecOptions{
    {"family", "generalized_gamma", "gamma, inverse_gaussian, generalized_gamma, beta or stable_beta"},
    {"a", "1", "total mass"},
    {"gamma", "0.5", "stability parameter (generalized gamma)"},
    {"theta", "1", "tilting parameter (generalized gamma)"},
    {"c", "1", "concentration (beta, stable-beta)"},
    {"sigma", "0", "discount (stable-beta)"},
    {"base_measure", "uniform(0,1)", "location law: uniform(a,b), normal(m,s), nig(m0,k0,a0,b0), empirical(path)"},
};

const std::vector<Option> kCurveOptions{
    {"mmax", "100", "largest truncation level M"},
    {"trajectories", "10000", "ensemble size N_FK"},
    {"moments", "4", "number of moments K"},
};

CrmSpec spec_of(const Values& v) {
  Values section;
  for (const auto& o : kSpecOptions) section[o.key] = get(v, o.key);
  return crm_spec_from_config(section);
}

std::vector<Option> concat(std::initializer_list<std::vector<Option>> groups) {
  std::vector<Option> out;
  for (const auto& g : groups) out.insert(out.end(), g.begin(), g.end());
  return out;
}

TruncationReport curve_of(const CrmSpec& spec, const Values& v, std::optional<double> target = std::nullopt) {
  return truncation_curve(spec, get_size(v, "mmax"), get_size(v, "trajectories"), get_u64(v, "seed"),
                          static_cast<int>(get_size(v, "moments")), target, threads_of(v));
}

// ---------------------------------------------------------------------------
// Commands

Outcome cmd_sample(const Values& v) {
  const auto spec = spec_of(v);
  const auto e = sample_ensemble(spec, get_size(v, "jumps"), get_size(v, "trajectories"), get_u64(v, "seed"),
                                 threads_of(v));
  std::ostringstream out;
  if (json_format(v)) {
    json j;
    j["spec"] = to_config(spec);
    j["seed"] = e.master_seed;
    j["trajectories"] = json::array();
    for (const auto& t : e.trajectories) {
      j["trajectories"].push_back({{"xi", t.xi}, {"jump", t.jumps}, {"location", t.locations}});
    }
    out << j.dump(2) << '\n';
  } else {
    write_ensemble_csv(e, out);
  }
  return {out.str(), {}};
}

Outcome cmd_truncation_curve(const Values& v) {
  const std::string target_text = get(v, "ltarget");
  std::optional<double> target;
  if (!target_text.empty()) target = get_double(v, "ltarget");
  const auto r = curve_of(spec_of(v), v, target);
  std::ostringstream out;
  if (json_format(v)) {
    out << report_to_json(r).dump(2) << '\n';
  } else {
    write_report_csv(r, out);
  }
  json results;
  results["resolved_M"] = r.resolved_m ? json(*r.resolved_m) : json(nullptr);
  return {out.str(), results};
}

Outcome cmd_truncation_grid(const Values& v) {
  const Family family = family_from_string(get(v, "family"));
  const bool gg = family == Family::Gamma || family == Family::InverseGaussian || family == Family::GeneralizedGamma;
  const auto p1 = get_range(get(v, "p1"), "p1");
  std::string p2_text = get(v, "p2");
  if (p2_text.empty()) p2_text = gg ? "0:0.8:20" : "0:30:20";
  const auto p2 = get_range(p2_text, "p2");
  const double target = get_double(v, "ltarget");
  const double theta = get_double(v, "theta");
  const double sigma = get_double(v, "sigma");
  json cells = json::array();
  std::ostringstream csv;
  csv << "param1,param2,M\n";
  for (double x : p1) {
    for (double y : p2) {
      const CrmSpec spec = gg ? CrmSpec::generalized_gamma(x, y, theta) : CrmSpec::stable_beta(x, y, sigma);
      const auto r = curve_of(spec, v, target);
      csv << fmt(x) << ',' << fmt(y) << ',' << (r.resolved_m ? std::to_string(*r.resolved_m) : "NA") << '\n';
      cells.push_back({{"param1", x},
                       {"param2", y},
                       {"M", r.resolved_m ? json(*r.resolved_m) : json(nullptr)},
                       {"ell_at_mmax", r.ell.back()}});
    }
  }
  if (json_format(v)) return {json{{"target", target}, {"cells", cells}}.dump(2) + "\n", {}};
  return {csv.str(), {}};
}

std::vector<DataSummary> scenarios_of(const Values& v) {
  std::vector<DataSummary> out;
  for (const auto& s : split(get(v, "scenarios"), ';')) out.push_back(DataSummary::from_freqs(get_sizes(s, "scenarios")));
  require(!out.empty(), "--scenarios: empty list");
  return out;
}

std::string freqs_text(const DataSummary& d) {
  std::string s;
  for (std::size_t i = 0; i < d.freqs.size(); ++i) s += (i ? " " : "") + std::to_string(d.freqs[i]);
  return s;
}

/// Number of clusters (or features) in each row of a ratio table: 1, n^p and n.
double k_of(const std::string& rule, std::size_t n, double p) {
  const double nn = static_cast<double>(n);
  if (rule == "one") return 1.0;
  return rule == "n" ? nn : std::pow(nn, p);
}

Outcome cmd_posterior_nrmi(const Values& v) {
  const double a = get_double(v, "a");
  const double g = get_double(v, "gamma");
  const std::string report = get(v, "report");
  const std::uint64_t seed = get_u64(v, "seed");
  json rows = json::array();
  std::ostringstream csv;
  if (report == "u-means") {
    csv << "scenario,n,k,mean_u\n";
    for (const auto& d : scenarios_of(v)) {
      const double m = nrmi::posterior_mean_u(d, a, g);
      csv << freqs_text(d) << ',' << d.n << ',' << fmt(d.k) << ',' << fmt(m) << '\n';
      rows.push_back({{"scenario", d.freqs}, {"n", d.n}, {"k", d.k}, {"mean_u", m}});
    }
  } else if (report == "ratio-table") {
    csv << "n,k_rule,k,mixed,quadrature\n";
    const auto ns = get_sizes(get(v, "ns"), "ns");
    const std::size_t draws = get_size(v, "draws");
    std::size_t idx = 0;
    for (const auto& rule : std::vector<std::string>{"one", "power", "n"}) {
      for (std::size_t n : ns) {
        const double k = k_of(rule, n, 0.5);
        const auto d = DataSummary::from_counts(n, k);
        Stream s = Stream::child(seed, idx++);
        const double mixed = nrmi::relative_importance_mixed(d, a, g, draws, s);
        const double quad = nrmi::relative_importance_quadrature(d, a, g);
        const std::string label = rule == "power" ? "sqrt_n" : rule;
        csv << n << ',' << label << ',' << fmt(k) << ',' << fmt(mixed) << ',' << fmt(quad) << '\n';
        rows.push_back({{"n", n}, {"k_rule", label}, {"k", k}, {"mixed", mixed}, {"quadrature", quad}});
      }
    }
  } else if (report == "curves") {
    csv << "curve,u,M,ell\n";
    const CrmSpec prior = CrmSpec::generalized_gamma(a, g);
    auto emit = [&](const std::string& label, double u, const TruncationReport& r) {
      for (std::size_t i = 0; i < r.m_grid.size(); ++i) {
        csv << label << ',' << fmt(u) << ',' << r.m_grid[i] << ',' << fmt(r.ell[i]) << '\n';
      }
      rows.push_back({{"curve", label}, {"u", u}, {"M", r.m_grid}, {"ell", r.ell}});
    };
    emit("prior", 0.0, curve_of(prior, v));
    for (const auto& d : scenarios_of(v)) {
      const double u = nrmi::posterior_mean_u(d, a, g);
      emit("posterior " + freqs_text(d), u, curve_of(nrmi::posterior_spec(prior, u), v));
    }
  } else {
    throw InvalidArgument("--report must be u-means, ratio-table or curves");
  }
  if (json_format(v)) return {json{{"report", report}, {"rows", rows}}.dump(2) + "\n", {}};
  return {csv.str(), {}};
}

Outcome cmd_posterior_ibp(const Values& v) {
  const double a = get_double(v, "a");
  const double c = get_double(v, "c");
  const double sigma = get_double(v, "sigma");
  const std::string report = get(v, "report");
  json rows = json::array();
  std::ostringstream csv;
  if (report == "table") {
    csv << "n,k_rule,k,ratio\n";
    for (const auto& rule : std::vector<std::string>{"one", "power", "n"}) {
      for (std::size_t n : get_sizes(get(v, "ns"), "ns")) {
        const double k = k_of(rule, n, sigma);
        const double ratio = ibp::relative_importance(n, k, c, sigma, a);
        const std::string label = rule == "power" ? "n^sigma" : rule;
        csv << n << ',' << label << ',' << fmt(k) << ',' << fmt(ratio) << '\n';
        rows.push_back({{"n", n}, {"k_rule", label}, {"k", k}, {"ratio", ratio}});
      }
    }
  } else if (report == "curves") {
    csv << "curve,n,M,ell\n";
    const CrmSpec prior = CrmSpec::stable_beta(a, c, sigma);
    auto emit = [&](const std::string& label, std::size_t n, const TruncationReport& r) {
      for (std::size_t i = 0; i < r.m_grid.size(); ++i) {
        csv << label << ',' << n << ',' << r.m_grid[i] << ',' << fmt(r.ell[i]) << '\n';
      }
      rows.push_back({{"curve", label}, {"n", n}, {"M", r.m_grid}, {"ell", r.ell}});
    };
    emit("prior", 0, curve_of(prior, v));
    for (std::size_t n : get_sizes(get(v, "curve_ns"), "curve_ns")) {
      emit("posterior", n, curve_of(ibp::posterior_spec(prior, n).tilted, v));
    }
  } else {
    throw InvalidArgument("--report must be table or curves");
  }
  if (json_format(v)) return {json{{"report", report}, {"rows", rows}}.dump(2) + "\n", {}};
  return {csv.str(), {}};
}

Outcome cmd_tail_bounds(const Values& v) {
  const double a = get_double(v, "a");
  const double c = get_double(v, "c");
  const double tol = get_double(v, "term_tol");
  json rows = json::array();
  std::ostringstream csv;
  csv << "sigma,M,epsilon,analytic,sharp,terms_used\n";
  for (double sigma : get_doubles(v, "sigmas")) {
    for (double eps : get_doubles(v, "eps")) {
      for (std::size_t m : get_sizes(get(v, "ms"), "ms")) {
        const auto r = sharp_tail_bound(m, eps, CrmSpec::stable_beta(a, c, sigma), tol);
        csv << fmt(sigma) << ',' << m << ',' << fmt(eps) << ',' << fmt(r.analytic_bound) << ','
            << fmt(r.sharp_bound) << ',' << r.terms_used << '\n';
        rows.push_back({{"sigma", sigma},
                        {"M", m},
                        {"epsilon", eps},
                        {"analytic", r.analytic_bound},
                        {"sharp", r.sharp_bound},
                        {"terms_used", r.terms_used}});
      }
    }
  }
  if (json_format(v)) return {json{{"rows", rows}}.dump(2) + "\n", {}};
  return {csv.str(), {}};
}

mixture::TruncationRule rule_of(const std::string& text) {
  const auto parts = split(text, ':');
  require(parts.size() == 2 && (parts[0] == "ell" || parts[0] == "e"), "--rule must be ell:<level> or e:<level>");
  const double level = get_double({{"rule", parts[1]}}, "rule");
  return parts[0] == "ell" ? mixture::TruncationRule::moment_match(level)
                           : mixture::TruncationRule::relative_error(level);
}

Outcome cmd_mixture(const Values& v) {
  std::string data = get(v, "data");
  if (data.empty()) data = std::string(CRM_FK_DATA_DIR) + "/galaxy.csv";
  const auto preset = mixture::preset_from_string(get(v, "preset"));
  const std::string report = get(v, "report");
  const double kappa0 = get_double(v, "kappa0");
  const double alpha0 = get_double(v, "alpha0");
  // every option is parsed before the long run starts
  const std::uint64_t seed = get_u64(v, "seed");
  const std::size_t m_cap = get_size(v, "m_cap");
  const std::size_t n_fk = get_size(v, "n_fk");
  const double a = get_double(v, "a");
  const bool as_json = json_format(v);
  const auto y = mixture::load_galaxy(data);
  const auto base = mixture::NigParams::from_data(y, kappa0, alpha0);
  json results;
  std::ostringstream out;
  if (report == "table") {
    mixture::Table3Config c;
    c.gammas = get_doubles(v, "gammas");
    c.e_levels = get_doubles(v, "e_levels");
    c.ell = get_double(v, "ell");
    c.a = a;
    c.preset = preset;
    c.base = base;
    c.m_cap = m_cap;
    c.n_fk = n_fk;
    c.seed = seed;
    const auto t = mixture::run_table3(c, y, threads_of(v));
    json levels = json::array();
    for (std::size_t g = 0; g < c.gammas.size(); ++g) {
      levels.push_back({{"gamma", c.gammas[g]},
                        {"M", t.reference_levels[g].m},
                        {"reached", t.reference_levels[g].reached},
                        {"ell_at_M", t.reference_levels[g].ell_at_m}});
    }
    results["moment_match_levels"] = levels;
    if (as_json) {
      json rows = json::array();
      for (const auto& r : t.rows) {
        rows.push_back({{"gamma", r.gamma}, {"e", r.e}, {"d_ks", r.d_ks}, {"mean_truncation", r.mean_truncation}});
      }
      out << json{{"rows", rows}, {"moment_match_levels", levels}}.dump(2) << '\n';
    } else {
      mixture::write_table3_csv(t, out);
    }
  } else if (report == "density") {
    mixture::MixtureConfig c;
    c.gamma = get_double(v, "gamma");
    c.a = a;
    c.rule = rule_of(get(v, "rule"));
    c.apply(preset);
    c.base = base;
    c.seed = seed;
    c.m_cap = m_cap;
    c.n_fk = n_fk;
    const auto r = mixture::run_gibbs(c, y, threads_of(v));
    const auto d = mixture::predictive_density(r.sweeps, mixture::uniform_grid());
    if (r.moment_match) {
      results["moment_match_level"] = {{"M", r.moment_match->m}, {"reached", r.moment_match->reached}};
    }
    if (as_json) {
      out << json{{"x", d.grid}, {"pdf", d.pdf}, {"cdf", d.cdf}}.dump(2) << '\n';
    } else {
      mixture::write_density_csv(d, out);
    }
  } else {
    throw InvalidArgument("--report must be table or density");
  }
  return {out.str(), results};
}

const std::vector<Command>& commands() {
  static const std::vector<Command> list{
      {"sample", "draw truncated Ferguson-Klass trajectories",
       concat({kSpecOptions, {{"jumps", "100", "jumps per trajectory M"}, {"trajectories", "10", "number of trajectories"}}}),
       cmd_sample},
      {"truncation-curve", "moment-match and relative-error indices for M = 1..mmax",
       concat({kSpecOptions, kCurveOptions, {{"ltarget", "", "resolve M(ell) for this ell"}}}), cmd_truncation_curve},
      {"truncation-grid", "M(ell) over a two-parameter grid",
       concat({{{"family", "generalized_gamma", "generalized_gamma (a, gamma) or stable_beta (a, c)"},
                {"p1", "0:2:20", "total mass grid lo:hi:n (cell midpoints)"},
                {"p2", "", "second parameter grid lo:hi:n; gamma 0:0.8:20 or c 0:30:20 by default"},
                {"theta", "1", "generalized gamma tilting"},
                {"sigma", "0", "stable-beta discount"},
                {"ltarget", "0.1", "target ell"}},
               kCurveOptions}),
       cmd_truncation_grid},
      {"posterior-nrmi", "normalized generalized gamma posterior reports",
       concat({{{"a", "1", "total mass"},
                {"gamma", "0.5", "stability parameter"},
                {"report", "u-means", "u-means, ratio-table or curves"},
                {"scenarios", "10;1,3,6;1,1,1,1,1,1,1,1,1,1", "cluster frequencies, scenarios separated by ';'"},
                {"ns", "10,30,100", "sample sizes of the ratio table"},
                {"draws", "100000", "draws of U per ratio-table cell"}},
               kCurveOptions}),
       cmd_posterior_nrmi},
      {"posterior-ibp", "stable-beta Indian buffet posterior reports",
       concat({{{"a", "1", "total mass"},
                {"c", "1", "concentration"},
                {"sigma", "0.5", "discount"},
                {"report", "table", "table or curves"},
                {"ns", "10,30,100", "sample sizes of the ratio table"},
                {"curve_ns", "5,10,20", "sample sizes of the posterior curves"}},
               kCurveOptions}),
       cmd_posterior_ibp},
      {"tail-bounds", "probability bounds on the stable-beta tail sum",
       {{"a", "1", "total mass"},
        {"c", "1", "concentration"},
        {"sigmas", "0,0.5", "discounts"},
        {"ms", "25,100,500", "truncation levels"},
        {"eps", "0.01", "probability levels"},
        {"term_tol", "1e-10", "relative stopping tolerance of the sharp bound"}},
       cmd_tail_bounds},
      {"mixture", "Galaxy mixture: KS table or one predictive density",
       {{"data", "", "Galaxy velocities, one per line (bundled file by default)"},
        {"preset", "desk", "desk (5000/1000/5) or full (20000/4000/5)"},
        {"report", "table", "table or density"},
        {"gammas", "0,0.25,0.5,0.75", "table: stability parameters"},
        {"e_levels", "0.1,0.05,0.01", "table: relative-error levels"},
        {"ell", "0.01", "table: moment-match level of the reference"},
        {"gamma", "0.25", "density: stability parameter"},
        {"rule", "ell:0.01", "density: ell:<level> or e:<level>"},
        {"a", "1", "total mass"},
        {"m_cap", "1000", "largest M for the moment-match search and the e rule"},
        {"n_fk", "10000", "trajectories used to locate M(ell)"},
        {"kappa0", "0.01", "base measure: prior precision factor of the mean"},
        {"alpha0", "2", "base measure: inverse-gamma shape"}},
       cmd_mixture},
  };
  return list;
}

const Command* find_command(const std::string& name) {
  for (const auto& c : commands())
    if (c.name == name) return &c;
  return nullptr;
}

const std::vector<Option> kCommonOptions{
    {"seed", "1", "master seed"},
    {"threads", "0", "worker threads (0: hardware, capped by CRM_FK_THREADS)"},
    {"format", "csv", "csv or json"},
};

// ---------------------------------------------------------------------------
// Output and manifests

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::string manifest_path(const std::string& out) { return out + ".manifest.json"; }

/// Runs a command on resolved values and writes its output and manifest.
int execute(const Command& cmd, const Values& values, const std::string& out_path, std::ostream& out,
            std::ostream& err) {
  const auto started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  Outcome result;
  try {
    result = cmd.run(values);
  } catch (const InvalidArgument& e) {
    err << "crmfk " << cmd.name << ": " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "crmfk " << cmd.name << ": numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "crmfk " << cmd.name << ": " << e.what() << '\n';
    return kExitNumeric;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (out_path.empty()) {
    out << result.body;
    return kExitOk;
  }
  {
    std::ofstream file(out_path, std::ios::binary);
    if (!file) {
      err << "crmfk " << cmd.name << ": cannot write '" << out_path << "'\n";
      return kExitUsage;
    }
    file << result.body;
  }
  json m;
  m["command"] = cmd.name;
  m["config"] = values;
  m["seed"] = values.at("seed");
  m["version"] = CRM_FK_VERSION;
  m["outputs"] = {out_path};
  m["results"] = result.results;
  m["started_utc"] = started;
  m["wall_clock_seconds"] = seconds;
  std::ofstream(manifest_path(out_path)) << m.dump(2) << '\n';
  for (auto it = result.results.begin(); it != result.results.end(); ++it) {
    err << it.key() << ": " << it.value().dump() << '\n';
  }
  return kExitOk;
}

int rerun(const std::string& manifest, const std::string& out_override, const std::string& threads_override,
          std::ostream& out, std::ostream& err) {
  std::ifstream in(manifest);
  if (!in) {
    err << "crmfk rerun: cannot open manifest '" << manifest << "'\n";
    return kExitUsage;
  }
  json m;
  try {
    in >> m;
  } catch (const std::exception& e) {
    err << "crmfk rerun: malformed manifest: " << e.what() << '\n';
    return kExitUsage;
  }
  const Command* cmd = m.contains("command") ? find_command(m["command"].get<std::string>()) : nullptr;
  if (!cmd || !m.contains("config") || !m["config"].is_object()) {
    err << "crmfk rerun: manifest lacks a known command or its config\n";
    return kExitUsage;
  }
  Values values = m["config"].get<Values>();
  if (!threads_override.empty()) values["threads"] = threads_override;
  std::string path = out_override;
  if (path.empty() && m.contains("outputs") && !m["outputs"].empty()) path = m["outputs"][0].get<std::string>();
  return execute(*cmd, values, path, out, err);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ferguson-Klass sampling of completely random measures with moment-match truncation", "crmfk"};
  app.set_version_flag("--version", std::string(CRM_FK_VERSION));
  app.require_subcommand(1);

  std::map<std::string, Values> storage;
  std::map<std::string, std::string> out_paths, config_paths;
  std::map<std::string, std::map<std::string, CLI::Option*>> bound;
  for (const auto& cmd : commands()) {
    auto* sub = app.add_subcommand(cmd.name, cmd.help);
    Values& values = storage[cmd.name];
    for (const auto* group : {&cmd.options, &kCommonOptions}) {
      for (const auto& o : *group) {
        values[o.key] = o.default_value;
        bound[cmd.name][o.key] = sub->add_option("--" + o.key, values[o.key], o.help)->capture_default_str();
      }
    }
    sub->add_option("--out", out_paths[cmd.name], "output file; a manifest is written next to it");
    sub->add_option("--config", config_paths[cmd.name], "INI file with [common] and [" + cmd.name + "] sections");
  }
  std::string manifest, rerun_out, rerun_threads;
  auto* rerun_cmd = app.add_subcommand("rerun", "repeat a run from its manifest");
  rerun_cmd->add_option("--manifest", manifest, "manifest written by an earlier run")->required();
  rerun_cmd->add_option("--out", rerun_out, "output file (default: the original one)");
  rerun_cmd->add_option("--threads", rerun_threads, "worker threads");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (rerun_cmd->parsed()) return rerun(manifest, rerun_out, rerun_threads, out, err);

  for (const auto& cmd : commands()) {
    if (!app.got_subcommand(cmd.name)) continue;
    Values& values = storage[cmd.name];
    if (const auto& cfg = config_paths[cmd.name]; !cfg.empty()) {
      boost::property_tree::ptree tree;
      try {
        boost::property_tree::ini_parser::read_ini(cfg, tree);
      } catch (const std::exception& e) {
        err << "crmfk " << cmd.name << ": cannot read config: " << e.what() << '\n';
        return kExitUsage;
      }
      for (const auto* section : {"common", cmd.name.c_str()}) {
        const auto node = tree.get_child_optional(section);
        if (!node) continue;
        for (const auto& [key, child] : *node) {
          auto it = bound[cmd.name].find(key);
          if (it == bound[cmd.name].end()) {
            err << "crmfk " << cmd.name << ": unknown config key '" << key << "' in [" << section << "]\n";
            return kExitUsage;
          }
          if (it->second->count() == 0) values[key] = child.get_value<std::string>();
        }
      }
    }
    return execute(cmd, values, out_paths[cmd.name], out, err);
  }
  return kExitUsage;
}

}  // namespace crm::app
