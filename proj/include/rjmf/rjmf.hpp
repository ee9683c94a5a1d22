#pragma once

#include "rjmf/als.hpp"
#include "rjmf/annealer.hpp"
#include "rjmf/empirical_bayes.hpp"
#include "rjmf/experiment.hpp"
#include "rjmf/helmert.hpp"
#include "rjmf/matrix.hpp"
#include "rjmf/model.hpp"
#include "rjmf/ratings.hpp"
