// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "stringwave/error.hpp"
#include "stringwave/model.hpp"
#include "stringwave/freqdomain.hpp"
#include "stringwave/gem.hpp"
#include "stringwave/sem.hpp"
#include "stringwave/scenario.hpp"
