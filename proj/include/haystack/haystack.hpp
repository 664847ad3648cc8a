#pragma once

#include "haystack/bounds.hpp"
#include "haystack/core_math.hpp"
#include "haystack/dataset.hpp"
#include "haystack/harness.hpp"
#include "haystack/network.hpp"
#include "haystack/training.hpp"
