#ifndef MAGROD_MAGROD_HPP
#define MAGROD_MAGROD_HPP

// Convenience umbrella. The CLI front end is not pulled in here because
// it depends on the vendored argument/JSON parsers; include
// magrod/cli.hpp directly when building the tool.

#include "magrod/core.hpp"
#include "magrod/model.hpp"
#include "magrod/ode.hpp"
#include "magrod/newton.hpp"
#include "magrod/eigen4.hpp"
#include "magrod/quadrature.hpp"
#include "magrod/analytic.hpp"
#include "magrod/melnikov.hpp"
#include "magrod/manifolds.hpp"
#include "magrod/io.hpp"

#endif
