#ifndef RIESZLAB_FIT_HPP
#define RIESZLAB_FIT_HPP

#include <span>

namespace rieszlab::fit {

struct Line {
  double intercept = 0.0;
  double slope = 0.0;
  double r2 = 0.0;
  double rss = 0.0;  // residual sum of squares
};

/// Ordinary least squares y = intercept + slope * x.
Line least_squares(std::span<const double> x, std::span<const double> y);

}  // namespace rieszlab::fit

#endif
