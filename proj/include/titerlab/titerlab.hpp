#pragma once

// Convenience catch-all include for the whole library.

#include <titerlab/analyzer.hpp>
#include <titerlab/boost_map.hpp>
#include <titerlab/config.hpp>
#include <titerlab/dyson.hpp>
#include <titerlab/ensemble.hpp>
#include <titerlab/evolve.hpp>
#include <titerlab/expr.hpp>
#include <titerlab/flow.hpp>
#include <titerlab/fp_matrix.hpp>
#include <titerlab/generator.hpp>
#include <titerlab/grid.hpp>
#include <titerlab/io.hpp>
#include <titerlab/lyapunov.hpp>
#include <titerlab/model.hpp>
#include <titerlab/phase_space.hpp>
#include <titerlab/report.hpp>
#include <titerlab/resolvent.hpp>
#include <titerlab/rng.hpp>
#include <titerlab/trajectory.hpp>
#include <titerlab/util.hpp>
#include <titerlab/verify.hpp>
