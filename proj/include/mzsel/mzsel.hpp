#pragma once

#include "mzsel/dynamics.hpp"
#include "mzsel/embedding.hpp"
#include "mzsel/error.hpp"
#include "mzsel/evaluation.hpp"
#include "mzsel/inspect.hpp"
#include "mzsel/io.hpp"
#include "mzsel/kernels.hpp"
#include "mzsel/manifest.hpp"
#include "mzsel/matrix.hpp"
#include "mzsel/rng.hpp"
#include "mzsel/scores.hpp"
#include "mzsel/simulate.hpp"
#include "mzsel/spectral.hpp"
#include "mzsel/stats.hpp"
#include "mzsel/subsample.hpp"
#include "mzsel/synth.hpp"
#include "mzsel/transport.hpp"
