#pragma once

#include "thalbench/stats/ancova.hpp"
#include "thalbench/stats/anova.hpp"
#include "thalbench/stats/distributions.hpp"
#include "thalbench/stats/logistic.hpp"
#include "thalbench/stats/tests.hpp"
