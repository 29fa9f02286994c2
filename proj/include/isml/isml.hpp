#pragma once

#include "isml/accuracies.hpp"
#include "isml/ensemble.hpp"
#include "isml/error.hpp"
#include "isml/imbalance.hpp"
#include "isml/linalg.hpp"
#include "isml/moments.hpp"
#include "isml/multiclass.hpp"
#include "isml/patterns.hpp"
#include "isml/pipeline.hpp"
#include "isml/prediction_data.hpp"
#include "isml/rng.hpp"
#include "isml/simulation.hpp"
#include "isml/spectral.hpp"
