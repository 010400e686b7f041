#pragma once

#include "scrollscape/config.hpp"
#include "scrollscape/enhancer.hpp"
#include "scrollscape/error.hpp"
#include "scrollscape/flow_matching.hpp"
#include "scrollscape/formats.hpp"
#include "scrollscape/fusion.hpp"
#include "scrollscape/image.hpp"
#include "scrollscape/matrix.hpp"
#include "scrollscape/metrics.hpp"
#include "scrollscape/pipeline.hpp"
#include "scrollscape/scan_trajectory.hpp"
#include "scrollscape/scanpe.hpp"
#include "scrollscape/sources.hpp"
