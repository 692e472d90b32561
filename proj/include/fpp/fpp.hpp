#pragma once

#include "fpp/lattice.hpp"
#include "fpp/random_field.hpp"
#include "fpp/passage.hpp"
#include "fpp/critical_geometry.hpp"
#include "fpp/geodesics.hpp"
#include "fpp/cluster_stats.hpp"
#include "fpp/estimators.hpp"
