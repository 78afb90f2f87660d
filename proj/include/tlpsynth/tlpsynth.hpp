#pragma once

// Umbrella header for the full library.

#include "tlpsynth/calibration.hpp"
#include "tlpsynth/codec.hpp"
#include "tlpsynth/error.hpp"
#include "tlpsynth/extractors.hpp"
#include "tlpsynth/generators.hpp"
#include "tlpsynth/image.hpp"
#include "tlpsynth/metrics.hpp"
#include "tlpsynth/pipeline.hpp"
#include "tlpsynth/png_io.hpp"
#include "tlpsynth/rng.hpp"
#include "tlpsynth/trace.hpp"
