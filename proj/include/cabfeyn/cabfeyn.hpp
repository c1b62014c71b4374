#pragma once

#include "cabfeyn/camb_hilbert.hpp"
#include "cabfeyn/error.hpp"
#include "cabfeyn/fresnel.hpp"
#include "cabfeyn/gbmp_sampler.hpp"
#include "cabfeyn/kernel.hpp"
#include "cabfeyn/operator_engine.hpp"
#include "cabfeyn/parallel.hpp"
#include "cabfeyn/quadrature.hpp"
#include "cabfeyn/scale_functions.hpp"
