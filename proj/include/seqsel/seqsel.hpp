#pragma once

#include "seqsel/config.hpp"
#include "seqsel/errors.hpp"
#include "seqsel/essfm.hpp"
#include "seqsel/fft.hpp"
#include "seqsel/fiber.hpp"
#include "seqsel/fit.hpp"
#include "seqsel/metric.hpp"
#include "seqsel/pulse.hpp"
#include "seqsel/receiver.hpp"
#include "seqsel/results.hpp"
#include "seqsel/rng.hpp"
#include "seqsel/selection.hpp"
#include "seqsel/sequence.hpp"
#include "seqsel/shaping.hpp"
#include "seqsel/signal.hpp"
#include "seqsel/stats.hpp"
#include "seqsel/sweep.hpp"
