#pragma once

#include "gateaux/brownian.hpp"
#include "gateaux/density.hpp"
#include "gateaux/errors.hpp"
#include "gateaux/functional.hpp"
#include "gateaux/integral.hpp"
#include "gateaux/parallel.hpp"
#include "gateaux/potential.hpp"
#include "gateaux/quadrature.hpp"
#include "gateaux/rng.hpp"
#include "gateaux/sphere.hpp"
#include "gateaux/stats.hpp"
