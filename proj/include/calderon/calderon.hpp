#pragma once

#include "calderon/analytic_dtn.hpp"
#include "calderon/born_inverse.hpp"
#include "calderon/conductivity.hpp"
#include "calderon/disk_grid.hpp"
#include "calderon/dtn_matrix.hpp"
#include "calderon/experiments.hpp"
#include "calderon/forward_solver.hpp"
#include "calderon/fourier_oracle.hpp"
#include "calderon/moment_engine.hpp"
#include "calderon/parallel.hpp"
#include "calderon/quadrature.hpp"
#include "calderon/specfun.hpp"
