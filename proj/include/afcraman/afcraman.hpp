#pragma once

#include "afcraman/analytic.hpp"
#include "afcraman/comb.hpp"
#include "afcraman/constants.hpp"
#include "afcraman/dynamics.hpp"
#include "afcraman/errors.hpp"
#include "afcraman/io.hpp"
#include "afcraman/link.hpp"
#include "afcraman/optimize.hpp"
#include "afcraman/parallel.hpp"
#include "afcraman/quadrature.hpp"
