#pragma once

#include "staleinfo/controller.hpp"
#include "staleinfo/estimator.hpp"
#include "staleinfo/model.hpp"
#include "staleinfo/queuing.hpp"
#include "staleinfo/riccati.hpp"
#include "staleinfo/simulator.hpp"
#include "staleinfo/tradeoff.hpp"
