#pragma once

#include "qbmon/harness/config.hpp"
#include "qbmon/harness/experiment.hpp"
#include "qbmon/harness/figures.hpp"
#include "qbmon/harness/output.hpp"
#include "qbmon/harness/scaling.hpp"
#include "qbmon/harness/sweep.hpp"
