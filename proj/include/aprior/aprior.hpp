#pragma once

#include "aprior/agent.hpp"
#include "aprior/audit.hpp"
#include "aprior/decision.hpp"
#include "aprior/episode_log.hpp"
#include "aprior/error.hpp"
#include "aprior/fnv1a.hpp"
#include "aprior/kb.hpp"
#include "aprior/perception.hpp"
#include "aprior/rng.hpp"
#include "aprior/world.hpp"
