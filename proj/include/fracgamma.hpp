#pragma once

#include "fracgamma/error.hpp"
#include "fracgamma/field.hpp"
#include "fracgamma/geometry.hpp"
#include "fracgamma/energy.hpp"
#include "fracgamma/solver.hpp"
#include "fracgamma/infinity.hpp"
#include "fracgamma/harness.hpp"
#include "fracgamma/io.hpp"
#include "fracgamma/oracle.hpp"
#include "fracgamma/config.hpp"
#include "fracgamma/run.hpp"
