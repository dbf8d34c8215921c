// Umbrella header.
#pragma once

#include "ggl/admm.hpp"
#include "ggl/common.hpp"
#include "ggl/datagen.hpp"
#include "ggl/dualnewton.hpp"
#include "ggl/ensemble.hpp"
#include "ggl/evalmetrics.hpp"
#include "ggl/io.hpp"
#include "ggl/objective.hpp"
#include "ggl/ppdna.hpp"
#include "ggl/proxops.hpp"
#include "ggl/spectral.hpp"
