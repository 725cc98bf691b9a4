// Umbrella header.
#pragma once

#include "dynlattice/analysis.hpp"
#include "dynlattice/core_optics.hpp"
#include "dynlattice/error.hpp"
#include "dynlattice/interference.hpp"
#include "dynlattice/io.hpp"
#include "dynlattice/rf_compiler.hpp"
#include "dynlattice/scene.hpp"
#include "dynlattice/schedules.hpp"
