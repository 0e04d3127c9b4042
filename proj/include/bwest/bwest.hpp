#pragma once

// Min-plus network-calculus toolkit for available-bandwidth estimation:
// curve algebra, traffic generators, a packet-level link simulator, the
// passive / rate-scanning / rate-chirp estimators with their stopping
// criteria, and tandem composition.

#include "composer.hpp"
#include "curve.hpp"
#include "estimator.hpp"
#include "io.hpp"
#include "legendre.hpp"
#include "minplus.hpp"
#include "netsim.hpp"
#include "rng.hpp"
#include "traffic.hpp"
#include "types.hpp"
