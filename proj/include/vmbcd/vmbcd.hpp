#pragma once

#include "vmbcd/experiment.hpp"
#include "vmbcd/libsvm.hpp"
#include "vmbcd/loss.hpp"
#include "vmbcd/partition.hpp"
#include "vmbcd/problem.hpp"
#include "vmbcd/regularizer.hpp"
#include "vmbcd/rng.hpp"
#include "vmbcd/sampling.hpp"
#include "vmbcd/solvers.hpp"
#include "vmbcd/sparse_matrix.hpp"
#include "vmbcd/subproblem.hpp"
#include "vmbcd/synth.hpp"
#include "vmbcd/theory.hpp"
#include "vmbcd/trace.hpp"
