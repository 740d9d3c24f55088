#pragma once

#include "nordstrom/errors.hpp"
#include "nordstrom/grid.hpp"
#include "nordstrom/fft.hpp"
#include "nordstrom/spectral_field.hpp"
#include "nordstrom/source.hpp"
#include "nordstrom/nonlinear.hpp"
#include "nordstrom/quadrature.hpp"
#include "nordstrom/wave_state.hpp"
#include "nordstrom/linear_solver.hpp"
#include "nordstrom/evolver.hpp"
#include "nordstrom/energy_monitor.hpp"
#include "nordstrom/blowup.hpp"
#include "nordstrom/positivity.hpp"
#include "nordstrom/experiment.hpp"
