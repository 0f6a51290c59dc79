#pragma once

#include "privcon/adversary.hpp"
#include "privcon/comparison.hpp"
#include "privcon/experiment.hpp"
#include "privcon/graph.hpp"
#include "privcon/graph_io.hpp"
#include "privcon/indistinguishability.hpp"
#include "privcon/invariants.hpp"
#include "privcon/opd.hpp"
#include "privcon/perturbation.hpp"
#include "privcon/protocols.hpp"
#include "privcon/random.hpp"
#include "privcon/trace_io.hpp"
#include "privcon/transforms.hpp"
#include "privcon/verify.hpp"
