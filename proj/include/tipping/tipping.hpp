#pragma once

#include "tipping/core.hpp"
#include "tipping/dynamics.hpp"
#include "tipping/ews.hpp"
#include "tipping/io.hpp"
#include "tipping/ks.hpp"
#include "tipping/measures.hpp"
#include "tipping/pipeline.hpp"
#include "tipping/recommended.hpp"
#include "tipping/reservoir.hpp"
#include "tipping/svg.hpp"
#include "tipping/systems.hpp"
