#pragma once

// Completely random measure families: Levy intensities, tail masses N(v) and
// their inverses, cumulants of the total mass and Laplace exponents.

#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "crm/errors.hpp"
#include "crm/random.hpp"
#include "crm/special_numerics.hpp"

namespace crm {

enum class Family { Gamma, InverseGaussian, GeneralizedGamma, Beta, StableBeta };

inline std::string to_string(Family f) {
  switch (f) {
    case Family::Gamma: return "gamma";
    case Family::InverseGaussian: return "inverse_gaussian";
    case Family::GeneralizedGamma: return "generalized_gamma";
    case Family::Beta: return "beta";
    case Family::StableBeta: return "stable_beta";
  }
  return "unknown";
}

inline Family family_from_string(const std::string& name) {
  if (name == "gamma" || name == "G") return Family::Gamma;
  if (name == "inverse_gaussian" || name == "IG") return Family::InverseGaussian;
  if (name == "generalized_gamma" || name == "GG") return Family::GeneralizedGamma;
  if (name == "beta" || name == "B") return Family::Beta;
  if (name == "stable_beta" || name == "SB" || name == "SBP") return Family::StableBeta;
  throw InvalidArgument("unknown CRM family '" + name + "'");
}

// ---------------------------------------------------------------------------
// Base measure P* for atom locations

/// Probability distribution of the atom locations.
class BaseMeasure {
 public:
  struct Uniform { double lo = 0.0, hi = 1.0; };
  struct Normal { double mean = 0.0, sd = 1.0; };
  /// mu | s2 ~ N(m0, s2 / kappa0), s2 ~ InvGamma(alpha0, beta0). As a location
  /// law only mu is reported.
  struct NormalInverseGamma { double m0 = 0.0, kappa0 = 1.0, alpha0 = 2.0, beta0 = 1.0; };
  struct Empirical {
    std::string path;
    std::shared_ptr<const std::vector<double>> values;
  };
  using Kind = std::variant<Uniform, Normal, NormalInverseGamma, Empirical>;

  BaseMeasure() : kind_(Uniform{}) {}
  explicit BaseMeasure(Kind kind) : kind_(std::move(kind)) { validate(); }

  static BaseMeasure uniform(double lo, double hi) { return BaseMeasure(Uniform{lo, hi}); }
  static BaseMeasure normal(double mean, double sd) { return BaseMeasure(Normal{mean, sd}); }
  static BaseMeasure normal_inverse_gamma(double m0, double kappa0, double alpha0, double beta0) {
    return BaseMeasure(NormalInverseGamma{m0, kappa0, alpha0, beta0});
  }
  /// Resamples the values listed one per line in `path`.
  static BaseMeasure empirical(const std::string& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), "cannot open empirical base measure file '" + path + "'");
    auto values = std::make_shared<std::vector<double>>();
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      values->push_back(std::stod(line));
    }
    return BaseMeasure(Empirical{path, values});
  }

  const Kind& kind() const { return kind_; }

  void validate() const {
    std::visit(
        [](const auto& k) {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, Uniform>) {
            require(k.lo < k.hi, "uniform base measure needs lo < hi");
          } else if constexpr (std::is_same_v<T, Normal>) {
            require(k.sd > 0.0, "normal base measure needs sd > 0");
          } else if constexpr (std::is_same_v<T, NormalInverseGamma>) {
            require(k.kappa0 > 0.0 && k.alpha0 > 0.0 && k.beta0 > 0.0,
                    "normal-inverse-gamma base measure needs positive kappa0, alpha0, beta0");
          } else {
            require(k.values && !k.values->empty(), "empirical base measure has no values");
          }
        },
        kind_);
  }

  double sample(Stream& stream) const {
    return std::visit(
        [&](const auto& k) -> double {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, Uniform>) {
            return k.lo + (k.hi - k.lo) * stream.uniform();
          } else if constexpr (std::is_same_v<T, Normal>) {
            return stream.normal(k.mean, k.sd);
          } else if constexpr (std::is_same_v<T, NormalInverseGamma>) {
            const double s2 = 1.0 / stream.gamma(k.alpha0, k.beta0);
            return stream.normal(k.m0, std::sqrt(s2 / k.kappa0));
          } else {
            const auto n = k.values->size();
            auto idx = static_cast<std::size_t>(stream.uniform() * static_cast<double>(n));
            return (*k.values)[std::min(idx, n - 1)];
          }
        },
        kind_);
  }

  /// Text form accepted by parse(): uniform(lo,hi), normal(mean,sd),
  /// nig(m0,kappa0,alpha0,beta0), empirical(path).
  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    std::visit(
        [&](const auto& k) {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, Uniform>) os << "uniform(" << k.lo << "," << k.hi << ")";
          else if constexpr (std::is_same_v<T, Normal>) os << "normal(" << k.mean << "," << k.sd << ")";
          else if constexpr (std::is_same_v<T, NormalInverseGamma>)
            os << "nig(" << k.m0 << "," << k.kappa0 << "," << k.alpha0 << "," << k.beta0 << ")";
          else os << "empirical(" << k.path << ")";
        },
        kind_);
    return os.str();
  }

  static BaseMeasure parse(const std::string& text) {
    const auto open = text.find('(');
    const auto close = text.rfind(')');
    require(open != std::string::npos && close != std::string::npos && close > open,
            "malformed base measure '" + text + "'");
    const std::string name = text.substr(0, open);
    const std::string inner = text.substr(open + 1, close - open - 1);
    if (name == "empirical") return empirical(inner);
    std::vector<double> args;
    std::stringstream ss(inner);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        args.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw InvalidArgument("malformed base measure argument '" + item + "'");
      }
    }
    auto expect = [&](std::size_t n) {
      require(args.size() == n, "base measure '" + name + "' takes " + std::to_string(n) +
                                    " arguments");
    };
    if (name == "uniform") { expect(2); return uniform(args[0], args[1]); }
    if (name == "normal") { expect(2); return normal(args[0], args[1]); }
    if (name == "nig") { expect(4); return normal_inverse_gamma(args[0], args[1], args[2], args[3]); }
    throw InvalidArgument("unknown base measure '" + name + "'");
  }

 private:
  Kind kind_;
};

// ---------------------------------------------------------------------------
// CRM specification

/// Family tag plus parameters of a homogeneous CRM with total mass a.
/// Immutable; construct through the named factories.
///
/// Generalized gamma (theta, gamma): rho(dv) = e^{-theta v} v^{-1-gamma} / Gamma(1-gamma) dv
/// Stable-beta (c, sigma): rho(dv) = Gamma(c+1) / (Gamma(1-sigma) Gamma(c+sigma))
///                                   v^{-sigma-1} (1-v)^{c+sigma-1} dv on (0, 1)
class CrmSpec {
 public:
  static CrmSpec gamma_process(double a, double theta = 1.0) {
    return CrmSpec(Family::Gamma, a, 0.0, theta, 0.0, 0.0);
  }
  static CrmSpec inverse_gaussian(double a, double theta = 1.0) {
    return CrmSpec(Family::InverseGaussian, a, 0.5, theta, 0.0, 0.0);
  }
  static CrmSpec generalized_gamma(double a, double gamma, double theta = 1.0) {
    return CrmSpec(Family::GeneralizedGamma, a, gamma, theta, 0.0, 0.0);
  }
  static CrmSpec beta_process(double a, double c) {
    return CrmSpec(Family::Beta, a, 0.0, 1.0, c, 0.0);
  }
  static CrmSpec stable_beta(double a, double c, double sigma) {
    return CrmSpec(Family::StableBeta, a, 0.0, 1.0, c, sigma);
  }

  Family family() const { return family_; }
  double a() const { return a_; }
  double gamma() const { return gamma_; }
  double theta() const { return theta_; }
  double c() const { return c_; }
  double sigma() const { return sigma_; }
  const BaseMeasure& base_measure() const { return base_; }

  bool is_generalized_gamma() const {
    return family_ == Family::Gamma || family_ == Family::InverseGaussian ||
           family_ == Family::GeneralizedGamma;
  }
  bool is_stable_beta() const { return !is_generalized_gamma(); }

  /// Jumps live in (0, support_upper()).
  double support_upper() const {
    return is_generalized_gamma() ? std::numeric_limits<double>::infinity() : 1.0;
  }

  CrmSpec with_base(BaseMeasure base) const {
    CrmSpec copy = *this;
    copy.base_ = std::move(base);
    return copy;
  }
  CrmSpec with_total_mass(double a) const {
    return CrmSpec(family_, a, gamma_, theta_, c_, sigma_, base_);
  }
  /// Same family with theta replaced (exponential tilting stays in family).
  CrmSpec with_theta(double theta) const {
    require(is_generalized_gamma(), "theta applies to generalized gamma families only");
    return CrmSpec(family_, a_, gamma_, theta, c_, sigma_, base_);
  }
  /// Same family with concentration replaced.
  CrmSpec with_concentration(double c) const {
    require(is_stable_beta(), "concentration applies to stable-beta families only");
    return CrmSpec(family_, a_, gamma_, theta_, c, sigma_, base_);
  }

  bool operator==(const CrmSpec& o) const {
    return family_ == o.family_ && a_ == o.a_ && gamma_ == o.gamma_ && theta_ == o.theta_ &&
           c_ == o.c_ && sigma_ == o.sigma_ && base_.describe() == o.base_.describe();
  }

 private:
  CrmSpec(Family family, double a, double gamma, double theta, double c, double sigma,
          BaseMeasure base = {})
      : family_(family), a_(a), gamma_(gamma), theta_(theta), c_(c), sigma_(sigma),
        base_(std::move(base)) {
    validate();
  }

  void validate() const {
    require(a_ > 0.0 && std::isfinite(a_), "total mass a must be positive");
    if (is_generalized_gamma()) {
      require(gamma_ >= 0.0 && gamma_ < 1.0, "gamma must lie in [0, 1)");
      require(theta_ > 0.0 && std::isfinite(theta_),
              "theta must be positive (theta = 0 has no finite moments)");
    } else {
      require(sigma_ >= 0.0 && sigma_ < 1.0, "sigma must lie in [0, 1)");
      require(c_ > -sigma_ && std::isfinite(c_), "concentration must satisfy c > -sigma");
    }
  }

  Family family_;
  double a_;
  double gamma_;
  double theta_;
  double c_;
  double sigma_;
  BaseMeasure base_;
};

/// Key-value config section: family, a, gamma, theta, c, sigma, base_measure.
inline std::map<std::string, std::string> to_config(const CrmSpec& spec) {
  auto fmt = [](double x) {
    std::ostringstream os;
    os.precision(17);
    os << x;
    return os.str();
  };
  std::map<std::string, std::string> out{{"family", to_string(spec.family())},
                                         {"a", fmt(spec.a())},
                                         {"base_measure", spec.base_measure().describe()}};
  if (spec.is_generalized_gamma()) {
    out["gamma"] = fmt(spec.gamma());
    out["theta"] = fmt(spec.theta());
  } else {
    out["c"] = fmt(spec.c());
    out["sigma"] = fmt(spec.sigma());
  }
  return out;
}

inline CrmSpec crm_spec_from_config(const std::map<std::string, std::string>& section) {
  auto get = [&](const std::string& key, std::optional<double> fallback) -> double {
    auto it = section.find(key);
    if (it == section.end()) {
      require(fallback.has_value(), "config section is missing key '" + key + "'");
      return *fallback;
    }
    try {
      return std::stod(it->second);
    } catch (const std::exception&) {
      throw InvalidArgument("config key '" + key + "' is not a number: " + it->second);
    }
  };
  auto fam_it = section.find("family");
  require(fam_it != section.end(), "config section is missing key 'family'");
  const Family family = family_from_string(fam_it->second);
  const double a = get("a", 1.0);
  CrmSpec spec = [&] {
    switch (family) {
      case Family::Gamma: return CrmSpec::gamma_process(a, get("theta", 1.0));
      case Family::InverseGaussian: return CrmSpec::inverse_gaussian(a, get("theta", 1.0));
      case Family::GeneralizedGamma:
        return CrmSpec::generalized_gamma(a, get("gamma", std::nullopt), get("theta", 1.0));
      case Family::Beta: return CrmSpec::beta_process(a, get("c", std::nullopt));
      case Family::StableBeta:
        return CrmSpec::stable_beta(a, get("c", std::nullopt), get("sigma", std::nullopt));
    }
    throw InvalidArgument("unknown family");
  }();
  if (auto it = section.find("base_measure"); it != section.end()) {
    spec = spec.with_base(BaseMeasure::parse(it->second));
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Tail mass N(v) = nu([v, inf) x X)

/// Callable N(v) with the v-independent constants cached, plus its inverse.
class TailMass {
 public:
  explicit TailMass(const CrmSpec& spec, const QuadratureSettings& quad = {},
                    const RootSettings& roots = {})
      : spec_(spec), roots_(roots) {
    if (spec.is_generalized_gamma()) {
      log_prefactor_ = std::log(spec.a()) + spec.gamma() * std::log(spec.theta()) -
                       std::lgamma(1.0 - spec.gamma());
    } else {
      log_prefactor_ = std::log(spec.a()) + std::lgamma(spec.c() + 1.0) -
                       std::lgamma(1.0 - spec.sigma()) - std::lgamma(spec.c() + spec.sigma());
      sbp_.emplace(spec.sigma(), spec.c(), quad);
    }
  }

  const CrmSpec& spec() const { return spec_; }

  double operator()(double v) const {
    require(v > 0.0, "tail_mass: v must be positive");
    if (spec_.is_generalized_gamma()) {
      const double g = upper_incomplete_gamma(-spec_.gamma(), spec_.theta() * v);
      return std::exp(log_prefactor_) * g;
    }
    if (v >= 1.0) return 0.0;
    return std::exp(log_prefactor_) * (*sbp_)(v);
  }

  /// The v with N(v) = xi. `prev_jump`, the previous (larger) jump of a
  /// trajectory, is used as the upper end of the search bracket.
  double inverse(double xi, std::optional<double> prev_jump = std::nullopt) const {
    require(xi > 0.0, "inverse_tail_mass: xi must be positive");
    if (spec_.family() == Family::Gamma && xi / spec_.a() > 3.0) {
      if (auto v = gamma_process_deep_inverse(xi / spec_.a())) return *v;
    }
    BracketHint hint;
    if (prev_jump && *prev_jump > 0.0) hint.upper = *prev_jump;
    return invert_monotone_decreasing([this](double v) { return (*this)(v); }, xi, hint, roots_,
                                      spec_.support_upper());
  }

 private:
  // Gamma process deep in the tail: E1(x) = r with x = theta v small. Newton in
  // s = log x, where dE1/ds = -exp(-x) and E1 ~ -euler - s is already close.
  std::optional<double> gamma_process_deep_inverse(double r) const {
    constexpr double kEuler = 0.57721566490153286061;
    auto e1 = [](double s) {
      const double x = std::exp(s);
      double sum = 0.0, term = 1.0;
      for (int k = 1; k < 200 && x > 0.0; ++k) {
        term *= -x / k;
        sum += term / k;
        if (std::abs(term) < 1e-17 * std::abs(sum)) break;
      }
      return -kEuler - s - sum;
    };
    double s = -r - kEuler;
    for (int it = 0; it < 50; ++it) {
      const double step = (e1(s) - r) * std::exp(std::exp(s));
      s += step;
      if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(s))) {
        return std::exp(s - std::log(spec_.theta()));
      }
    }
    return std::nullopt;
  }

  CrmSpec spec_;
  RootSettings roots_;
  double log_prefactor_ = 0.0;
  std::optional<SbpTailIntegral> sbp_;
};

inline double tail_mass(const CrmSpec& spec, double v) { return TailMass(spec)(v); }

inline double inverse_tail_mass(const CrmSpec& spec, double xi,
                                std::optional<double> prev_jump = std::nullopt) {
  return TailMass(spec).inverse(xi, prev_jump);
}

// ---------------------------------------------------------------------------
// Cumulants and Laplace exponent

/// i-th cumulant of the total mass, kappa_i = a int v^i rho(dv), in closed form.
inline double cumulant(const CrmSpec& spec, int i) {
  require(i >= 1, "cumulant index must be >= 1");
  const auto k = static_cast<std::size_t>(i - 1);
  if (spec.is_generalized_gamma()) {
    // a (1-gamma)_(i-1) theta^(gamma - i)
    return spec.a() * ascending_factorial(1.0 - spec.gamma(), k) *
           std::pow(spec.theta(), spec.gamma() - i);
  }
  return spec.a() * ascending_factorial(1.0 - spec.sigma(), k) /
         ascending_factorial(spec.c() + 1.0, k);
}

/// a int_0^inf v^i rho(dv) by quadrature; an independent check on cumulant().
inline double cumulant_by_quadrature(const CrmSpec& spec, int i,
                                     const QuadratureSettings& settings = {1e-12, 1e-300, 400}) {
  require(i >= 1, "cumulant index must be >= 1");
  if (spec.is_generalized_gamma()) {
    // v = e^s: a / Gamma(1-gamma) int exp((i-gamma) s - theta e^s) ds
    const double p = i - spec.gamma();
    const double theta = spec.theta();
    const double s_lo = -60.0 / p;
    const double s_hi = std::log((800.0 + 20.0 * i) / theta);
    auto f = [&](double s) { return std::exp(p * s - theta * std::exp(s)); };
    return spec.a() / std::tgamma(1.0 - spec.gamma()) * integrate(f, s_lo, s_hi, settings);
  }
  // int_0^1 v^{i-sigma-1} (1-v)^{c+sigma-1} dv, singularities removed by substitution.
  const double sigma = spec.sigma();
  const double kappa = spec.c() + sigma;
  const double p = i - sigma;
  auto lower = [&](double s) {  // v = s^{1/p}
    const double v = std::pow(s, 1.0 / p);
    return std::pow(1.0 - v, kappa - 1.0);
  };
  auto upper = [&](double s) {  // 1 - v = s^{1/kappa}
    const double w = std::pow(s, 1.0 / kappa);
    return std::pow(1.0 - w, p - 1.0);
  };
  const double part = integrate(lower, 0.0, std::pow(0.5, p), settings) / p +
                      integrate(upper, 0.0, std::pow(0.5, kappa), settings) / kappa;
  const double log_pref =
      std::lgamma(spec.c() + 1.0) - std::lgamma(1.0 - sigma) - std::lgamma(spec.c() + sigma);
  return spec.a() * std::exp(log_pref) * part;
}

/// psi(u) = a int (1 - e^{-u v}) rho(dv), so that E[exp(-u mu(X))] = exp(-psi(u)).
inline double laplace_exponent(const CrmSpec& spec, double u) {
  require(u >= 0.0, "laplace_exponent requires u >= 0");
  if (u == 0.0) return 0.0;
  if (spec.is_generalized_gamma()) {
    const double theta = spec.theta();
    if (spec.gamma() == 0.0) return spec.a() * std::log1p(u / theta);
    const double g = spec.gamma();
    return spec.a() / g * (std::pow(theta + u, g) - std::pow(theta, g));
  }
  const double sigma = spec.sigma();
  const double kappa = spec.c() + sigma;
  const QuadratureSettings settings{1e-12, 1e-300, 400};
  auto damped = [&](double v) { return v > 0.0 ? -std::expm1(-u * v) / v : u; };
  // lower half: v = s^{1/(1-sigma)} so that v^{-sigma} dv = ds / (1 - sigma)
  auto lower = [&](double s) {
    const double v = std::pow(s, 1.0 / (1.0 - sigma));
    return damped(v) * std::pow(1.0 - v, kappa - 1.0);
  };
  // upper half: 1 - v = s^{1/kappa}
  auto upper = [&](double s) {
    const double v = 1.0 - std::pow(s, 1.0 / kappa);
    return (-std::expm1(-u * v)) * std::pow(v, -sigma - 1.0);
  };
  const double part = integrate(lower, 0.0, std::pow(0.5, 1.0 - sigma), settings) / (1.0 - sigma) +
                      integrate(upper, 0.0, std::pow(0.5, kappa), settings) / kappa;
  const double log_pref =
      std::lgamma(spec.c() + 1.0) - std::lgamma(1.0 - sigma) - std::lgamma(spec.c() + sigma);
  return spec.a() * std::exp(log_pref) * part;
}

}  // namespace crm
