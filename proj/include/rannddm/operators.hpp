#pragma once

#include <functional>
#include <string>

#include "rannddm/geometry.hpp"
#include "rannddm/jet.hpp"

namespace rannddm {

/// A linear differential operator expressed as a functional on second-order
/// jets: given the jet of u at x, returns A[u](x).
struct LinearOperator {
  std::string name;
  std::function<double(const Point&, const Jet2&)> apply;
};

/// -Delta u = -(trace of the Hessian).
inline LinearOperator minus_laplacian() {
  return {"minus_laplacian", [](const Point&, const Jet2& u) {
            double tr = 0.0;
            for (int a = 0; a < u.dim; ++a) tr += u.hess(a, a);
            return -tr;
          }};
}

/// -Delta u + u.
inline LinearOperator reaction_diffusion() {
  return {"reaction_diffusion", [](const Point&, const Jet2& u) {
            double tr = 0.0;
            for (int a = 0; a < u.dim; ++a) tr += u.hess(a, a);
            return -tr + u.v;
          }};
}

/// d_t u + d_x u - kappa d_xx u on space-time jets (axis 0 = x, axis 1 = t).
inline LinearOperator advection_diffusion(double kappa) {
  return {"advection_diffusion", [kappa](const Point&, const Jet2& u) {
            return u.g[1] + u.g[0] - kappa * u.hess(0, 0);
          }};
}

}  // namespace rannddm
