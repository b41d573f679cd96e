#pragma once

#include <cmath>
#include <utility>

namespace stochchain {

struct LineMinimum {
  double arg;
  double value;
};

// Golden-section minimization of a unimodal f on [lo, hi]. Stops when the
// bracket is narrower than tol.
template <typename F>
LineMinimum golden_section_minimize(F&& f, double lo, double hi, double tol = 1e-10,
                                    int max_iterations = 500) {
  constexpr double inv_phi = 0.6180339887498949;  // (sqrt(5) - 1) / 2
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  for (int i = 0; i < max_iterations && (hi - lo) > tol; ++i) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - inv_phi * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + inv_phi * (hi - lo);
      fd = f(d);
    }
  }
  const double mid = 0.5 * (lo + hi);
  const double fm = f(mid);
  // Report the best point seen among the final probes.
  if (fc <= fm && fc <= fd) return {c, fc};
  if (fd <= fm) return {d, fd};
  return {mid, fm};
}

}  // namespace stochchain
