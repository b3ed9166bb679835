#include "wlfrail/quadrature.hpp"

#include <cmath>
#include <queue>
#include <stdexcept>
#include <vector>

#include "wlfrail/errors.hpp"

namespace wlfrail {

namespace {

// Kronrod-15 abscissae on [0,1] (symmetric) and weights; Gauss-7 weights
// sit on the odd-index Kronrod nodes.
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Segment {
  double a;
  double b;
  double value;
  double err;
  bool operator<(const Segment& other) const { return err < other.err; }
};

Segment gauss_kronrod(const std::function<double(double)>& f, double a,
                      double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  double result_g = 0.0;
  double result_k = 0.0;
  for (int j = 0; j < 8; ++j) {
    // Gauss-7 nodes are the odd-index Kronrod pairs plus the center point.
    const double fsum =
        j == 7 ? f(center)
               : f(center - half * kXgk[j]) + f(center + half * kXgk[j]);
    if (!std::isfinite(fsum)) {
      throw QuadratureError("integrate_adaptive: non-finite integrand value");
    }
    result_k += kWgk[j] * fsum;
    if (j % 2 == 1 || j == 7) {
      result_g += kWg[j / 2] * fsum;
    }
  }
  return Segment{a, b, result_k * half,
                 std::fabs(result_k - result_g) * half};
}

}  // namespace

QuadratureResult integrate_adaptive(const std::function<double(double)>& f,
                                    double lower, double upper,
                                    const QuadratureSpec& spec) {
  if (!(spec.abs_tol > 0.0) || !(spec.rel_tol > 0.0) ||
      spec.max_subdivisions < 1) {
    throw std::domain_error("integrate_adaptive: invalid QuadratureSpec");
  }
  if (std::isnan(lower) || std::isnan(upper) || !(lower < upper) ||
      std::isinf(lower)) {
    throw std::domain_error("integrate_adaptive: invalid bounds");
  }

  std::function<double(double)> g;
  double a = lower;
  double b = upper;
  if (std::isinf(upper)) {
    // t = lower + u/(1-u) maps (0,1) onto (lower, inf).
    g = [&f, lower](double u) {
      const double om = 1.0 - u;
      const double t = lower + u / om;
      const double val = f(t);
      return val == 0.0 ? 0.0 : val / (om * om);
    };
    a = 0.0;
    b = 1.0;
  } else {
    g = f;
  }

  std::priority_queue<Segment> queue;
  queue.push(gauss_kronrod(g, a, b));
  double total_value = queue.top().value;
  double total_err = queue.top().err;

  int used = 1;
  while (total_err >
         std::max(spec.abs_tol, spec.rel_tol * std::fabs(total_value))) {
    if (used >= spec.max_subdivisions) {
      throw QuadratureError(
          "integrate_adaptive: tolerance not reached within max_subdivisions");
    }
    const Segment worst = queue.top();
    queue.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    const Segment left = gauss_kronrod(g, worst.a, mid);
    const Segment right = gauss_kronrod(g, mid, worst.b);
    total_value += left.value + right.value - worst.value;
    total_err += left.err + right.err - worst.err;
    queue.push(left);
    queue.push(right);
    ++used;
  }
  return QuadratureResult{total_value, total_err};
}

}  // namespace wlfrail
