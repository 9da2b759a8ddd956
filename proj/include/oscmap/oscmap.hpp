#pragma once

#include "oscmap/errors.hpp"
#include "oscmap/expr.hpp"
#include "oscmap/io.hpp"
#include "oscmap/jet.hpp"
#include "oscmap/numeric.hpp"
#include "oscmap/ode.hpp"
#include "oscmap/range_relations.hpp"
#include "oscmap/scattering.hpp"
#include "oscmap/tdho.hpp"
#include "oscmap/tunneling.hpp"
#include "oscmap/verify.hpp"
