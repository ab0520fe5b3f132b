#pragma once

// Matrix-free stochastic diagonal estimation: probe streams, implicit
// operators, deflation-based estimators, query-count bounds, and the
// adaptive driver that picks the projection size and probe count jointly.

#include "diagest/adaptive.hpp"
#include "diagest/basis.hpp"
#include "diagest/bounds.hpp"
#include "diagest/core.hpp"
#include "diagest/estimators.hpp"
#include "diagest/graph.hpp"
#include "diagest/linop.hpp"
#include "diagest/matrix_market.hpp"
#include "diagest/probes.hpp"
#include "diagest/specfun.hpp"
#include "diagest/synth.hpp"
