#pragma once

// Umbrella header for the library.

#include "chaos_mgrit/types.hpp"
#include "chaos_mgrit/odes.hpp"
#include "chaos_mgrit/steppers.hpp"
#include "chaos_mgrit/hierarchy.hpp"
#include "chaos_mgrit/mgrit.hpp"
#include "chaos_mgrit/lyapunov.hpp"
