#pragma once

#include "polymatch/complex_geometry.hpp"
#include "polymatch/error.hpp"
#include "polymatch/invariants.hpp"
#include "polymatch/kd_tree.hpp"
#include "polymatch/matcher.hpp"
#include "polymatch/poly_index.hpp"
#include "polymatch/triangle_noise.hpp"
