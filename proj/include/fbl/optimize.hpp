#pragma once

// Derivative-free uphill search used to start chains near a posterior mode.
// Binary coordinates are held fixed; -inf log density is treated as a wall.

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include "fbl/error.hpp"
#include "fbl/param.hpp"

namespace fbl {

struct ModeResult {
  std::vector<double> x;
  double log_density = kNegInf;
  std::size_t iterations = 0;
};

namespace detail {

template <SamplingTarget M>
struct ModeProblem {
  const M* target;
  std::vector<double> full;
  std::vector<std::size_t> free;

  double eval(const gsl_vector* v) {
    for (std::size_t i = 0; i < free.size(); ++i) full[free[i]] = gsl_vector_get(v, i);
    const double lp = target->log_density(full);
    return std::isfinite(lp) ? -lp : 1e300;
  }

  static double call(const gsl_vector* v, void* self) { return static_cast<ModeProblem*>(self)->eval(v); }
};

struct VectorFree {
  void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};
struct MinimizerFree {
  void operator()(gsl_multimin_fminimizer* m) const { gsl_multimin_fminimizer_free(m); }
};

}  // namespace detail

// Nelder-Mead from x0, restarted `restarts` times with the initial simplex
// shrinking by 0.3 each round (first round: 0.1 of each coordinate's scale).
template <SamplingTarget M>
ModeResult find_mode(const M& target, std::vector<double> x0, std::size_t restarts = 6, std::size_t max_iter = 3000) {
  const auto layout = target.layout();
  detail::require(x0.size() == layout.size(), "find_mode: start has wrong length");
  ModeResult out{x0, target.log_density(x0), 0};
  detail::require(out.log_density > kNegInf, "find_mode: start is outside the support");

  detail::ModeProblem<M> prob{&target, x0, {}};
  for (std::size_t i = 0; i < layout.size(); ++i) {
    if (layout[i].kind == ParamKind::Continuous) prob.free.push_back(i);
  }
  const std::size_t n = prob.free.size();
  if (n == 0) return out;
  gsl_set_error_handler_off();  // status codes are checked instead

  double shrink = 1.0;
  for (std::size_t r = 0; r < restarts; ++r, shrink *= 0.3) {
    std::unique_ptr<gsl_vector, detail::VectorFree> start(gsl_vector_alloc(n));
    std::unique_ptr<gsl_vector, detail::VectorFree> step(gsl_vector_alloc(n));
    for (std::size_t i = 0; i < n; ++i) {
      gsl_vector_set(start.get(), i, out.x[prob.free[i]]);
      gsl_vector_set(step.get(), i, 0.1 * shrink * layout[prob.free[i]].scale);
    }
    gsl_multimin_function fn{&detail::ModeProblem<M>::call, n, &prob};
    std::unique_ptr<gsl_multimin_fminimizer, detail::MinimizerFree> nm(
        gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n));
    gsl_multimin_fminimizer_set(nm.get(), &fn, start.get(), step.get());
    for (std::size_t it = 0; it < max_iter; ++it) {
      ++out.iterations;
      if (gsl_multimin_fminimizer_iterate(nm.get()) != GSL_SUCCESS) break;
      if (gsl_multimin_fminimizer_size(nm.get()) < 1e-10) break;
    }
    const double lp = -gsl_multimin_fminimizer_minimum(nm.get());
    if (lp > out.log_density) {
      for (std::size_t i = 0; i < n; ++i) out.x[prob.free[i]] = gsl_vector_get(gsl_multimin_fminimizer_x(nm.get()), i);
      out.log_density = target.log_density(out.x);
    }
  }
  return out;
}

}  // namespace fbl
