#pragma once

#include "frakdiff/blockenc.hpp"
#include "frakdiff/carleman.hpp"
#include "frakdiff/errors.hpp"
#include "frakdiff/fft.hpp"
#include "frakdiff/grid.hpp"
#include "frakdiff/lchs.hpp"
#include "frakdiff/linalg.hpp"
#include "frakdiff/ode.hpp"
#include "frakdiff/potential.hpp"
#include "frakdiff/problem.hpp"
#include "frakdiff/spectral.hpp"
#include "frakdiff/trotter.hpp"
