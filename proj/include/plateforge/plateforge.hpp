// Umbrella header.
#pragma once

#include "plateforge/common.hpp"
#include "plateforge/config.hpp"
#include "plateforge/dataset.hpp"
#include "plateforge/fft.hpp"
#include "plateforge/metrics.hpp"
#include "plateforge/plate.hpp"
#include "plateforge/rng.hpp"
#include "plateforge/solver.hpp"
#include "plateforge/surrogate.hpp"
#include "plateforge/threading.hpp"
#include "plateforge/trajectory.hpp"
#include "plateforge/trajectory_io.hpp"
#include "plateforge/wav.hpp"
