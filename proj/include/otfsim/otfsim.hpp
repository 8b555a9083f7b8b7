#pragma once

/// Umbrella header for the OTFS ISAC simulation library.

#include "otfsim/channel.hpp"
#include "otfsim/common.hpp"
#include "otfsim/config.hpp"
#include "otfsim/constellation.hpp"
#include "otfsim/dd_operator.hpp"
#include "otfsim/equalizer.hpp"
#include "otfsim/estimation.hpp"
#include "otfsim/experiments.hpp"
#include "otfsim/fft.hpp"
#include "otfsim/fnn.hpp"
#include "otfsim/frame.hpp"
#include "otfsim/metrics.hpp"
#include "otfsim/rng.hpp"
#include "otfsim/waveform.hpp"
