#ifndef RIESZLAB_CORE_HPP
#define RIESZLAB_CORE_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace rieszlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double pi = std::numbers::pi;

// Failure classes. The CLI maps them onto exit codes: config -> 2,
// numerical -> 3, unsupported -> 4; the rest count as numerical failures
// of the input geometry.
enum class ErrorKind {
  precondition,
  numerical,
  unsupported,
  topology,
  patch_radius,
  rank_deficiency,
  orientation,
  singular,
  pole,
  config,
  io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Carries the residue of a closed-form beta function evaluated at its pole.
class PoleError : public Error {
 public:
  PoleError(const std::string& what, double residue)
      : Error(ErrorKind::pole, what), residue_(residue) {}
  double residue() const noexcept { return residue_; }

 private:
  double residue_;
};

class PatchRadiusError : public Error {
 public:
  PatchRadiusError(const std::string& what, double validated_radius)
      : Error(ErrorKind::patch_radius, what), validated_(validated_radius) {}
  double validated_radius() const noexcept { return validated_; }

 private:
  double validated_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) fail(kind, what);
}

/// Neumaier-compensated accumulator; the order of `add` calls fixes the result.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double compensated_total(const std::vector<double>& terms);

/// Worker count: explicit override, else RIESZ_LAB_THREADS, else hardware.
int thread_count();
void set_thread_count(int n);

/// Runs body(i) for i in [0, n) on up to thread_count() workers. Each index
/// is visited exactly once; callers write results into per-index slots and
/// reduce afterwards so the outcome does not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace rieszlab

#endif
