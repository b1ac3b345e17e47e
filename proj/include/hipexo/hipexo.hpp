#pragma once

#include "hipexo/basis.hpp"
#include "hipexo/controller.hpp"
#include "hipexo/controller_log.hpp"
#include "hipexo/csv.hpp"
#include "hipexo/error.hpp"
#include "hipexo/gait_data.hpp"
#include "hipexo/hs_detect.hpp"
#include "hipexo/metrics.hpp"
#include "hipexo/modulation.hpp"
#include "hipexo/optimizer.hpp"
#include "hipexo/params_io.hpp"
#include "hipexo/signal.hpp"
#include "hipexo/simulate.hpp"
#include "hipexo/synth.hpp"
#include "hipexo/version.hpp"
