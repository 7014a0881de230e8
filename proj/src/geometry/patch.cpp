#include "rieszlab/geometry/patch.hpp"

#include <algorithm>
#include <cmath>

namespace rieszlab::geometry {

GraphPatch::GraphPatch(Vec base, Mat tangent, Mat normal, double radius)
    : base_(std::move(base)), tangent_(std::move(tangent)), normal_(std::move(normal)),
      radius_(radius) {
  require(tangent_.rows() == base_.size() && normal_.rows() == base_.size() &&
              tangent_.cols() + normal_.cols() == base_.size(),
          ErrorKind::precondition, "graph patch: frame sizes do not match the ambient space");
}

Vec GraphPatch::embed(const Vec& u, const Vec& h) const {
  return base_ + tangent_ * u + normal_ * h;
}

bool GraphPatch::contains(const Vec& y, double tol) const {
  const Vec d = y - base_;
  const Vec u = tangent_.transpose() * d;
  if (u.norm() > radius_ * (1.0 + 1e-12)) return false;
  Vec h;
  Mat dh;
  PatchHint hint;
  // Continuation from the base point keeps the solve on this sheet.
  const int steps = 1 + static_cast<int>(4.0 * u.norm() / std::max(radius_, 1e-300));
  for (int s = 1; s <= steps; ++s)
    if (!height(u * (static_cast<double>(s) / steps), h, dh, &hint)) return false;
  return (normal_.transpose() * d - h).norm() <= tol * (1.0 + radius_);
}

FunctionPatch::FunctionPatch(Vec base, Mat tangent, Mat normal, double radius, HeightFn f)
    : GraphPatch(std::move(base), std::move(tangent), std::move(normal), radius),
      f_(std::move(f)) {}

bool FunctionPatch::height(const Vec& u, Vec& h, Mat& dh, PatchHint*) const {
  return f_(u, h, dh);
}

ChartPatch::ChartPatch(const Chart& chart, Vec q0, Vec base, Mat tangent, Mat normal,
                       double radius)
    : GraphPatch(std::move(base), std::move(tangent), std::move(normal), radius),
      chart_(chart), q0_(std::move(q0)) {
  ChartJet j;
  chart_.jet(q0_, j, false);
  det0_ = (tangent_.transpose() * j.jac).determinant();
  require(std::abs(det0_) > 0, ErrorKind::rank_deficiency,
          "chart patch: chart Jacobian is degenerate at the base point");
}

namespace {

// Small square solves without pivoting overhead for m <= 2.
double small_det(const Mat& a) {
  if (a.rows() == 1) return a(0, 0);
  if (a.rows() == 2) return a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
  return a.determinant();
}

void small_inverse(const Mat& a, Mat& inv) {
  if (a.rows() == 1) {
    inv.resize(1, 1);
    inv(0, 0) = 1.0 / a(0, 0);
  } else if (a.rows() == 2) {
    const double d = small_det(a);
    inv.resize(2, 2);
    inv << a(1, 1) / d, -a(0, 1) / d, -a(1, 0) / d, a(0, 0) / d;
  } else {
    inv = a.inverse();
  }
}

}  // namespace

bool ChartPatch::height(const Vec& u, Vec& h, Mat& dh, PatchHint* hint) const {
  const int m = dim();
  thread_local ChartJet j;
  thread_local Vec q, f, step, d;
  thread_local Mat a, inv;
  q = (hint && hint->valid) ? hint->q : q0_;
  const double det0 = det0_;
  const double scale = 1.0 + u.norm();
  bool converged = false;
  a.resize(m, m);
  for (int it = 0; it < 40; ++it) {
    chart_.jet(q, j, false);
    d = j.pos - base_;
    f.noalias() = tangent_.transpose() * d;
    f -= u;
    a.noalias() = tangent_.transpose() * j.jac;
    if (f.norm() <= 1e-14 * scale) {
      converged = true;
      break;
    }
    const double det = small_det(a);
    if (!(det * det0 > 0) || std::abs(det) < 1e-14 * std::abs(det0)) return false;
    small_inverse(a, inv);
    step.noalias() = inv * f;
    // Damp steps larger than the patch to stay on this sheet.
    const double limit = 0.5 + 2.0 * radius_ / std::max(j.jac.norm(), 1e-300);
    if (step.norm() > limit) step *= limit / step.norm();
    q -= step;
    if (!q.allFinite()) return false;
  }
  if (!converged) return false;
  if (!(small_det(a) * det0 > 0)) return false;
  small_inverse(a, inv);
  h.noalias() = normal_.transpose() * d;
  dh.noalias() = normal_.transpose() * j.jac * inv;
  if (hint) {
    hint->q = q;
    hint->valid = true;
  }
  return true;
}

PolynomialPatch::PolynomialPatch(Vec base, Mat tangent, Mat normal, double radius,
                                 std::vector<std::array<int, 2>> exponents,
                                 Mat coefficients)
    : GraphPatch(std::move(base), std::move(tangent), std::move(normal), radius),
      exps_(std::move(exponents)), coeff_(std::move(coefficients)) {
  require(coeff_.rows() == codim() && coeff_.cols() == static_cast<long>(exps_.size()),
          ErrorKind::precondition, "polynomial patch: coefficient shape mismatch");
  for (const auto& e : exps_)
    require(e[0] + e[1] >= 2, ErrorKind::precondition,
            "polynomial patch: constant and linear terms are not allowed");
}

bool PolynomialPatch::height(const Vec& u, Vec& h, Mat& dh, PatchHint*) const {
  const int m = dim();
  const double x = u[0], y = m > 1 ? u[1] : 0.0;
  h = Vec::Zero(codim());
  dh = Mat::Zero(codim(), m);
  auto ipow = [](double b, int e) {
    double r = 1.0;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
  };
  for (std::size_t t = 0; t < exps_.size(); ++t) {
    const int a = exps_[t][0], b = exps_[t][1];
    const double mono = ipow(x, a) * ipow(y, b);
    const double dx = a > 0 ? a * ipow(x, a - 1) * ipow(y, b) : 0.0;
    const double dy = b > 0 ? b * ipow(x, a) * ipow(y, b - 1) : 0.0;
    for (int k = 0; k < codim(); ++k) {
      h[k] += coeff_(k, t) * mono;
      dh(k, 0) += coeff_(k, t) * dx;
      if (m > 1) dh(k, 1) += coeff_(k, t) * dy;
    }
  }
  return true;
}

PatchBounds measure_patch(const GraphPatch& patch, double radius, int radial, int angular,
                          int k) {
  const int m = patch.dim();
  require(m == 1 || m == 2, ErrorKind::unsupported,
          "patch bounds are measured for m = 1 and m = 2 only");
  PatchBounds out;
  out.radial_samples = radial;
  out.angular_samples = m == 1 ? 2 : angular;
  const int rays = out.angular_samples;
  // Per ray, the largest sampled radius up to which everything is valid.
  std::vector<double> good(rays, radius);
  struct Sample {
    Vec u;
    PatchHint hint;
  };
  std::vector<Sample> samples;
  for (int j = 0; j < rays; ++j) {
    Vec v(m);
    if (m == 1)
      v[0] = j == 0 ? 1.0 : -1.0;
    else
      v << std::cos(2.0 * pi * j / rays), std::sin(2.0 * pi * j / rays);
    PatchHint hint;
    Vec h, dh_dummy;
    Mat dh;
    double last = 0.0;
    const int sub = 4;  // continuation substeps between recorded samples
    for (int i = 1; i <= radial * sub; ++i) {
      const double r = radius * i / (radial * sub);
      const Vec u = r * v;
      bool ok = patch.height(u, h, dh, &hint) && h.allFinite() && dh.allFinite();
      // chord length must grow along the ray: d/dxi (xi^2 + |h|^2) > 0
      if (ok) ok = r + h.dot(dh * v) > 0.0;
      if (!ok) break;
      last = r;
      if (i % sub == 0) samples.push_back({u, hint});
    }
    good[j] = last;
  }
  out.validated_radius = *std::min_element(good.begin(), good.end());
  samples.push_back({Vec::Zero(m), PatchHint{}});

  const double d2 = 1e-4 * radius, d3 = 2e-3 * radius;
  auto eval_dh = [&](const Vec& u, PatchHint hint, Mat& dh) {
    Vec h;
    return patch.height(u, h, dh, &hint);
  };
  out.by_order.fill(0.0);
  for (auto& s : samples) {
    if (s.u.norm() > out.validated_radius * (1 + 1e-12)) continue;
    Vec h;
    Mat dh;
    PatchHint hint = s.hint;
    if (!patch.height(s.u, h, dh, &hint)) continue;
    out.by_order[0] = std::max(out.by_order[0], h.cwiseAbs().maxCoeff());
    out.by_order[1] = std::max(out.by_order[1], dh.cwiseAbs().maxCoeff());
    if (k < 2) continue;
    const int c = patch.codim();
    std::vector<Mat> dp(m), dm(m);
    bool ok = true;
    for (int a = 0; a < m && ok; ++a) {
      Vec e = Vec::Zero(m);
      e[a] = d2;
      ok = eval_dh(s.u + e, hint, dp[a]) && eval_dh(s.u - e, hint, dm[a]);
    }
    if (!ok) continue;
    for (int a = 0; a < m; ++a) {
      const Mat second = (dp[a] - dm[a]) / (2.0 * d2);  // d_a Dh
      for (int i = 0; i < c; ++i)
        for (int b = 0; b < m; ++b)
          out.by_order[2] = std::max(out.by_order[2], std::abs(second(i, b)));
    }
    if (k < 3) continue;
    Mat d0;
    if (!eval_dh(s.u, hint, d0)) continue;
    for (int a = 0; a < m; ++a)
      for (int b = a; b < m; ++b) {
        Mat third;
        Vec ea = Vec::Zero(m), eb = Vec::Zero(m);
        ea[a] = d3;
        eb[b] = d3;
        if (a == b) {
          Mat p, q;
          if (!eval_dh(s.u + ea, hint, p) || !eval_dh(s.u - ea, hint, q)) continue;
          third = (p - 2.0 * d0 + q) / (d3 * d3);
        } else {
          Mat pp, pm, mp, mm;
          if (!eval_dh(s.u + ea + eb, hint, pp) || !eval_dh(s.u + ea - eb, hint, pm) ||
              !eval_dh(s.u - ea + eb, hint, mp) || !eval_dh(s.u - ea - eb, hint, mm))
            continue;
          third = (pp - pm - mp + mm) / (4.0 * d3 * d3);
        }
        out.by_order[3] = std::max(out.by_order[3], third.cwiseAbs().maxCoeff());
      }
  }
  out.b = 0.0;
  for (int o = 0; o <= std::min(k, 3); ++o) out.b = std::max(out.b, out.by_order[o]);
  return out;
}

}  // namespace rieszlab::geometry
