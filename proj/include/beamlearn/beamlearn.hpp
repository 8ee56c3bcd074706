#pragma once

#include "beamlearn/beam.hpp"
#include "beamlearn/config.hpp"
#include "beamlearn/data_collection.hpp"
#include "beamlearn/errors.hpp"
#include "beamlearn/learner.hpp"
#include "beamlearn/losses.hpp"
#include "beamlearn/optimizer.hpp"
#include "beamlearn/oracles.hpp"
#include "beamlearn/rng.hpp"
#include "beamlearn/run.hpp"
#include "beamlearn/scoring.hpp"
#include "beamlearn/search_space.hpp"
#include "beamlearn/task.hpp"
