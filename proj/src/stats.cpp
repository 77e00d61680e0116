#include "bratteli/stats.hpp"

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>

#include <cmath>
#include <stdexcept>

namespace bratteli::stats {

double MeanAccumulator::standard_error() const noexcept {
  return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
}

Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z) {
  if (trials == 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
  const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / (1 + z2 / n);
  return {successes == 0 ? 0.0 : std::max(0.0, centre - half), successes == trials ? 1.0 : std::min(1.0, centre + half)};
}

double proportion_se(double p, std::uint64_t n) {
  if (n == 0) return 0.0;
  return std::sqrt(p * (1 - p) / static_cast<double>(n));
}

double chi_square_sf(double x, double df) {
  if (df <= 0) throw std::invalid_argument("chi-square needs positive degrees of freedom");
  if (x <= 0) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(df), x));
}

double binomial_pmf(std::uint64_t n, double p, std::uint64_t k) {
  if (k > n) return 0.0;
  if (p <= 0.0) return k == 0 ? 1.0 : 0.0;
  if (p >= 1.0) return k == n ? 1.0 : 0.0;
  return boost::math::pdf(boost::math::binomial_distribution<double>(static_cast<double>(n), p),
                          static_cast<double>(k));
}

std::pair<double, std::size_t> pearson_pooled(std::span<const double> observed,
                                              std::span<const double> expected,
                                              double min_expected) {
  if (observed.size() != expected.size()) throw std::invalid_argument("cell count mismatch");
  std::vector<double> obs;
  std::vector<double> exp;
  double o = 0.0;
  double e = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    o += observed[i];
    e += expected[i];
    if (e >= min_expected) {
      obs.push_back(o);
      exp.push_back(e);
      o = e = 0.0;
    }
  }
  // leftover tail joins the last full cell
  if (e > 0.0 || o > 0.0) {
    if (exp.empty()) {
      obs.push_back(o);
      exp.push_back(e);
    } else {
      obs.back() += o;
      exp.back() += e;
    }
  }
  double chi2 = 0.0;
  for (std::size_t i = 0; i < obs.size(); ++i) {
    if (exp[i] > 0.0) chi2 += (obs[i] - exp[i]) * (obs[i] - exp[i]) / exp[i];
  }
  return {chi2, obs.size()};
}

}  // namespace bratteli::stats
