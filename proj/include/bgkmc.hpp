#pragma once

#include "bgkmc/error.hpp"
#include "bgkmc/estimators.hpp"
#include "bgkmc/imex_table.hpp"
#include "bgkmc/io.hpp"
#include "bgkmc/maxwellian.hpp"
#include "bgkmc/mesh.hpp"
#include "bgkmc/quadrature.hpp"
#include "bgkmc/random_inputs.hpp"
#include "bgkmc/reference.hpp"
#include "bgkmc/sample_farm.hpp"
#include "bgkmc/sampling.hpp"
#include "bgkmc/solver.hpp"
#include "bgkmc/transport.hpp"
