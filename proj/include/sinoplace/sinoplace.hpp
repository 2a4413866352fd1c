#pragma once

#include "sinoplace/common.hpp"
#include "sinoplace/descriptor.hpp"
#include "sinoplace/eval.hpp"
#include "sinoplace/fft.hpp"
#include "sinoplace/ingest.hpp"
#include "sinoplace/matcher.hpp"
#include "sinoplace/parallel.hpp"
#include "sinoplace/pipeline.hpp"
#include "sinoplace/radon.hpp"
#include "sinoplace/rng.hpp"
#include "sinoplace/synth.hpp"
#include "sinoplace/warp.hpp"
