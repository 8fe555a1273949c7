#pragma once

// Umbrella header for the core library. Image file I/O (image_io.hpp) is
// kept separate because it links against OpenCV imgcodecs.

#include "vista/cache.hpp"
#include "vista/data.hpp"
#include "vista/encoder.hpp"
#include "vista/idspace.hpp"
#include "vista/image.hpp"
#include "vista/metrics.hpp"
#include "vista/prompts.hpp"
#include "vista/runner.hpp"
#include "vista/scoring.hpp"
