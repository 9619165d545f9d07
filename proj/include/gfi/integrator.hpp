// Fixed-step classical Runge-Kutta.
#pragma once

#include "gfi/core.hpp"

namespace gfi {

template <typename Rhs>
Vec rk4_step(Rhs&& rhs, double t, const Vec& y, double dt) {
    const Vec k1 = rhs(t, y);
    const Vec k2 = rhs(t + 0.5 * dt, y + 0.5 * dt * k1);
    const Vec k3 = rhs(t + 0.5 * dt, y + 0.5 * dt * k2);
    const Vec k4 = rhs(t + dt, y + dt * k3);
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace gfi
