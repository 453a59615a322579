#pragma once

#include "vuix/attack_theory.hpp"
#include "vuix/errors.hpp"
#include "vuix/grid_model.hpp"
#include "vuix/monte_carlo.hpp"
#include "vuix/stochastic_model.hpp"
#include "vuix/vulnerability.hpp"
