#pragma once

#include "reach_al/active.hpp"
#include "reach_al/dataset.hpp"
#include "reach_al/error.hpp"
#include "reach_al/features.hpp"
#include "reach_al/forest.hpp"
#include "reach_al/kinematics.hpp"
#include "reach_al/metrics.hpp"
#include "reach_al/perception.hpp"
#include "reach_al/report.hpp"
#include "reach_al/rng.hpp"
