#pragma once

// Umbrella header: community detection for multi-layer networks by
// spectral clustering of the summed adjacency matrix.

#include "sumspec/clustering.hpp"
#include "sumspec/eigensolver.hpp"
#include "sumspec/error.hpp"
#include "sumspec/estimation.hpp"
#include "sumspec/evaluation.hpp"
#include "sumspec/graph.hpp"
#include "sumspec/model.hpp"
#include "sumspec/pipeline.hpp"
#include "sumspec/rng.hpp"
