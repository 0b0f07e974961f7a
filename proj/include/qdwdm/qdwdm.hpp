#pragma once

#include "qdwdm/analysis.hpp"
#include "qdwdm/commands.hpp"
#include "qdwdm/csv.hpp"
#include "qdwdm/detection.hpp"
#include "qdwdm/dwdm.hpp"
#include "qdwdm/errors.hpp"
#include "qdwdm/polarization_state.hpp"
#include "qdwdm/reference.hpp"
#include "qdwdm/scenario.hpp"
#include "qdwdm/spdc_source.hpp"
#include "qdwdm/tuning.hpp"
#include "qdwdm/units.hpp"
