#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace bratteli::stats {

/// Welford accumulator. Feed values in a fixed order to get reproducible sums.
class MeanAccumulator {
 public:
  void add(double x) noexcept {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }

  std::uint64_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  /// Unbiased sample variance (0 for fewer than two samples).
  double variance() const noexcept { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double standard_error() const noexcept;

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// Wilson score interval for a binomial proportion; z = 1.959964 gives 95%.
Interval wilson_interval(std::uint64_t successes, std::uint64_t trials, double z = 1.959963984540054);

/// Standard error of a proportion with known probability p over n trials.
double proportion_se(double p, std::uint64_t n);

/// Upper tail P(X >= x) of the chi-square distribution with df degrees of freedom.
double chi_square_sf(double x, double df);

/// Binomial(n, p) probability mass at k.
double binomial_pmf(std::uint64_t n, double p, std::uint64_t k);

/// Pearson chi-square statistic of observed counts against expected counts,
/// after merging adjacent cells until every expected count is at least
/// `min_expected`. Returns (statistic, number of merged cells).
std::pair<double, std::size_t> pearson_pooled(std::span<const double> observed,
                                              std::span<const double> expected,
                                              double min_expected = 5.0);

}  // namespace bratteli::stats
