#include "qgraph/edge_solutions.hpp"

#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <numbers>

#include "qgraph/error.hpp"

namespace qgraph {
namespace {

using std::numbers::pi;

// Transfer matrix of -y'' + v y = lambda y over a stretch of constant v.
Eigen::Matrix2cd constant_transfer(cplx lambda, double v, double len) {
  const cplx mu = lambda - v;
  const cplx z = mu * len * len;
  cplx c, s;
  if (std::abs(z) < 1e-4) {
    // Taylor series of the entire functions cos(sqrt z), sin(sqrt z)/sqrt z.
    cplx term_c = 1.0, term_s = 1.0;
    c = 0.0;
    s = 0.0;
    for (int n = 0; n < 8; ++n) {
      c += term_c;
      s += term_s;
      term_c *= -z / double((2 * n + 1) * (2 * n + 2));
      term_s *= -z / double((2 * n + 2) * (2 * n + 3));
    }
    s *= len;
  } else {
    const cplx k = std::sqrt(mu);
    c = std::cos(k * len);
    s = std::sin(k * len) / k;
  }
  Eigen::Matrix2cd t;
  t << c, s, -mu * s, c;
  return t;
}

Eigen::Matrix2cd rk4_step(cplx lambda, const Potential& v, double x, double h,
                          const Eigen::Matrix2cd& y) {
  auto rhs = [&](double at, const Eigen::Matrix2cd& m) {
    Eigen::Matrix2cd a;
    a << 0.0, 1.0, v(at) - lambda, 0.0;
    return Eigen::Matrix2cd(a * m);
  };
  const Eigen::Matrix2cd k1 = rhs(x, y);
  const Eigen::Matrix2cd k2 = rhs(x + 0.5 * h, y + 0.5 * h * k1);
  const Eigen::Matrix2cd k3 = rhs(x + 0.5 * h, y + 0.5 * h * k2);
  const Eigen::Matrix2cd k4 = rhs(x + h, y + h * k3);
  return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Adaptive RK4 with step doubling on a stretch where v is smooth (linear).
Eigen::Matrix2cd integrate_smooth(cplx lambda, const Potential& v, double a, double b,
                                  double total_length, Eigen::Matrix2cd y) {
  if (b <= a) return y;
  const double scale = std::sqrt(std::abs(lambda) + std::abs(v(a)) + std::abs(v(b)) + 1.0);
  double h = std::min(b - a, 0.05 / scale);
  double x = a;
  while (x < b) {
    h = std::min(h, b - x);
    const Eigen::Matrix2cd full = rk4_step(lambda, v, x, h, y);
    const Eigen::Matrix2cd half = rk4_step(lambda, v, x, 0.5 * h, y);
    const Eigen::Matrix2cd two_halves = rk4_step(lambda, v, x + 0.5 * h, 0.5 * h, half);
    const double err = (two_halves - full).norm() / 15.0;
    const double allowed =
        kIntegrationTolerance * std::max(1.0, two_halves.norm()) * h / total_length;
    if (err <= allowed || h < 1e-12 * total_length) {
      y = two_halves + (two_halves - full) / 15.0;
      x += h;
      const double grow = err > 0.0 ? 0.9 * std::pow(allowed / err, 0.2) : 4.0;
      h *= std::clamp(grow, 0.2, 4.0);
    } else {
      h *= std::clamp(0.9 * std::pow(allowed / err, 0.2), 0.1, 0.5);
    }
  }
  return y;
}

Eigen::Matrix2cd sampled_transfer(cplx lambda, double length, const Potential& v) {
  Eigen::Matrix2cd y = Eigen::Matrix2cd::Identity();
  double cursor = 0.0;
  for (const auto& sample : v.samples()) {
    if (sample.x <= cursor) continue;
    const double next = std::min(sample.x, length);
    y = integrate_smooth(lambda, v, cursor, next, length, y);
    cursor = next;
    if (cursor >= length) break;
  }
  if (cursor < length) y = integrate_smooth(lambda, v, cursor, length, length, y);
  return y;
}

}  // namespace

Eigen::Matrix2cd transfer_matrix(cplx lambda, double length, const Potential& potential) {
  if (potential.kind() == Potential::Kind::Sampled)
    return sampled_transfer(lambda, length, potential);
  Eigen::Matrix2cd t = Eigen::Matrix2cd::Identity();
  for (const auto& seg : potential.constant_segments(length))
    t = constant_transfer(lambda, seg.value, seg.length) * t;
  return t;
}

EdgeBasis cs_values(cplx lambda, double length, const Potential& potential) {
  const Eigen::Matrix2cd t = transfer_matrix(lambda, length, potential);
  return {t(0, 0), t(0, 1), t(1, 0), t(1, 1)};
}

std::vector<EdgeBasis> cs_profile(cplx lambda, double length, const Potential& potential,
                                  std::span<const double> xs) {
  std::vector<EdgeBasis> out;
  out.reserve(xs.size());
  Eigen::Matrix2cd t = Eigen::Matrix2cd::Identity();
  double prev = 0.0;
  for (double x : xs) {
    if (x < prev) throw input_error("cs_profile: grid must be sorted");
    if (x > length * (1.0 + 1e-12)) throw input_error("cs_profile: point beyond the edge");
    if (x > prev) t = transfer_matrix(lambda, x - prev, potential.restrict(prev, x)) * t;
    prev = x;
    out.push_back({t(0, 0), t(0, 1), t(1, 0), t(1, 1)});
  }
  return out;
}

bool near_dirichlet(const EdgeBasis& basis, cplx lambda, double length) {
  return std::abs(basis.s) < 1e-8 * (1.0 + std::abs(lambda)) * length;
}

Eigen::Matrix2cd dtn_block(cplx lambda, double length, const Potential& potential,
                           std::string_view edge_id) {
  const EdgeBasis b = cs_values(lambda, length, potential);
  if (near_dirichlet(b, lambda, length)) {
    const double nearest = nearest_dirichlet(length, potential, lambda.real()).second;
    throw DirichletSingularity(std::string(edge_id), nearest);
  }
  Eigen::Matrix2cd d;
  d << -b.c, 1.0, 1.0, -b.sp;
  return d / b.s;
}

Matrix42cd edge_trace_subspace(cplx lambda, double length, const Potential& potential,
                               SolutionBasis basis) {
  Matrix42cd p;
  if (basis == SolutionBasis::CosineSine) {
    const EdgeBasis b = cs_values(lambda, length, potential);
    p << 1.0, 0.0,  //
        0.0, 1.0,   //
        b.c, b.s,   //
        -b.cp, -b.sp;
    return p;
  }
  if (!potential.is_zero())
    throw precondition_error("exponential basis requires a zero potential");
  if (std::abs(lambda) == 0.0)
    throw precondition_error("exponential basis degenerates at lambda = 0");
  const cplx ik = cplx(0.0, 1.0) * std::sqrt(lambda);
  const cplx e = std::exp(ik * length);
  // f1 = exp(ikx), f2 = exp(ik(l - x)); inward derivative at l is -f'(l).
  p << 1.0, e,  //
      ik, -ik * e,  //
      e, 1.0,       //
      -ik * e, ik;
  return p;
}

Eigen::Vector2cd exponential_to_cs(cplx lambda, double length, const Eigen::Vector2cd& coeffs) {
  const cplx ik = cplx(0.0, 1.0) * std::sqrt(lambda);
  const cplx e = std::exp(ik * length);
  return {coeffs(0) + e * coeffs(1), ik * coeffs(0) - ik * e * coeffs(1)};
}

std::vector<double> dirichlet_eigenvalues(double length, const Potential& potential,
                                          double lambda_max) {
  std::vector<double> out;
  const double base = pi / length;
  if (potential.kind() == Potential::Kind::Zero || potential.kind() == Potential::Kind::Constant) {
    const double shift = potential.constant_value();
    for (int n = 1;; ++n) {
      const double lam = n * n * base * base + shift;
      if (lam > lambda_max) break;
      out.push_back(lam);
    }
    return out;
  }
  // Sign changes of S(lambda, l), which is real for real lambda and V.
  const double vmin = potential.min_value(length);
  auto s_of = [&](double lam) { return cs_values(lam, length, potential).s.real(); };
  double kappa = 0.5 * base;
  double prev_lam = vmin + kappa * kappa;
  double prev_s = s_of(prev_lam);
  const double dk = base / 16.0;
  while (prev_lam <= lambda_max) {
    kappa += dk;
    const double lam = vmin + kappa * kappa;
    const double s = s_of(lam);
    if (prev_s == 0.0) {
      out.push_back(prev_lam);
    } else if (s != 0.0 && (s > 0.0) != (prev_s > 0.0)) {
      boost::uintmax_t iters = 200;
      auto tol = boost::math::tools::eps_tolerance<double>(52);
      const auto root =
          boost::math::tools::toms748_solve(s_of, prev_lam, lam, prev_s, s, tol, iters);
      const double r = 0.5 * (root.first + root.second);
      if (r <= lambda_max) out.push_back(r);
    }
    prev_lam = lam;
    prev_s = s;
  }
  return out;
}

std::pair<int, double> nearest_dirichlet(double length, const Potential& potential,
                                         double lambda) {
  const double base = pi / length;
  if (potential.kind() == Potential::Kind::Zero || potential.kind() == Potential::Kind::Constant) {
    const double shifted = lambda - potential.constant_value();
    int n = 1;
    if (shifted > 0.0) n = std::max(1, static_cast<int>(std::lround(std::sqrt(shifted) / base)));
    return {n, n * n * base * base + potential.constant_value()};
  }
  const double vmin = potential.min_value(length);
  const double vmax = potential.max_value(length);
  const double kappa = std::sqrt(std::max(0.0, lambda - vmin)) + 2.0 * base;
  const auto values = dirichlet_eigenvalues(length, potential, vmax + kappa * kappa);
  if (values.empty()) return {1, base * base + vmin};
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (std::abs(values[i] - lambda) < std::abs(values[best] - lambda)) best = i;
  return {static_cast<int>(best) + 1, values[best]};
}

}  // namespace qgraph
