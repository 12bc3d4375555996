#ifndef STCHO_STCHO_HPP
#define STCHO_STCHO_HPP

#include "stcho/config.hpp"
#include "stcho/csf.hpp"
#include "stcho/display.hpp"
#include "stcho/error.hpp"
#include "stcho/experiment.hpp"
#include "stcho/fft.hpp"
#include "stcho/label.hpp"
#include "stcho/observer.hpp"
#include "stcho/parallel.hpp"
#include "stcho/percept.hpp"
#include "stcho/rng.hpp"
#include "stcho/roc.hpp"
#include "stcho/stack_io.hpp"
#include "stcho/stacks.hpp"
#include "stcho/trial.hpp"
#include "stcho/volume.hpp"

#endif  // STCHO_STCHO_HPP
