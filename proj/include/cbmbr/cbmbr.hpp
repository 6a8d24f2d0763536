#pragma once

#include "cbmbr/bench.hpp"
#include "cbmbr/clustering.hpp"
#include "cbmbr/core_types.hpp"
#include "cbmbr/decoders.hpp"
#include "cbmbr/embedding_file.hpp"
#include "cbmbr/parallel.hpp"
#include "cbmbr/rng.hpp"
#include "cbmbr/scenario.hpp"
#include "cbmbr/synth.hpp"
#include "cbmbr/timing.hpp"
#include "cbmbr/utility.hpp"
