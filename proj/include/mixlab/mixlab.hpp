#ifndef MIXLAB_MIXLAB_HPP
#define MIXLAB_MIXLAB_HPP

#include "mixlab/core.hpp"
#include "mixlab/states.hpp"
#include "mixlab/dynamics.hpp"
#include "mixlab/coupling.hpp"
#include "mixlab/spectral.hpp"
#include "mixlab/exact.hpp"
#include "mixlab/parallel.hpp"
#include "mixlab/harness.hpp"
#include "mixlab/experiment.hpp"

#endif
