#pragma once

// Umbrella header.

#include "hierlearn/braindump.hpp"
#include "hierlearn/config.hpp"
#include "hierlearn/dataset.hpp"
#include "hierlearn/hermite.hpp"
#include "hierlearn/hierarchy.hpp"
#include "hierlearn/io.hpp"
#include "hierlearn/loss.hpp"
#include "hierlearn/metrics.hpp"
#include "hierlearn/poly.hpp"
#include "hierlearn/proximity.hpp"
#include "hierlearn/ptf.hpp"
#include "hierlearn/resnet.hpp"
#include "hierlearn/rf_fit.hpp"
#include "hierlearn/rng.hpp"
#include "hierlearn/solver.hpp"
#include "hierlearn/train.hpp"
#include "hierlearn/version.hpp"
