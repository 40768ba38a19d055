#pragma once

#include "brecs/errors.hpp"
#include "brecs/rng.hpp"
#include "brecs/linalg.hpp"
#include "brecs/distributions.hpp"
#include "brecs/model.hpp"
#include "brecs/gibbs.hpp"
#include "brecs/selection.hpp"
#include "brecs/simulation.hpp"
#include "brecs/io.hpp"
#include "brecs/report.hpp"
