#pragma once

#include "robust_bayes/core.hpp"
#include "robust_bayes/quadrature.hpp"
#include "robust_bayes/gauss_rules.hpp"
#include "robust_bayes/model.hpp"
#include "robust_bayes/losses.hpp"
#include "robust_bayes/sandwich.hpp"
#include "robust_bayes/priors.hpp"
#include "robust_bayes/nelder_mead.hpp"
#include "robust_bayes/inference.hpp"
#include "robust_bayes/asymptotics.hpp"
#include "robust_bayes/simulation.hpp"
#include "robust_bayes/config.hpp"
