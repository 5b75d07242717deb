#pragma once

#include "fibreopt/error.hpp"
#include "fibreopt/torus.hpp"
#include "fibreopt/linalg.hpp"
#include "fibreopt/cost_model.hpp"
#include "fibreopt/catalog.hpp"
#include "fibreopt/newton.hpp"
#include "fibreopt/table.hpp"
#include "fibreopt/tracker.hpp"
#include "fibreopt/offline.hpp"
#include "fibreopt/query.hpp"
#include "fibreopt/oracle.hpp"
#include "fibreopt/table_io.hpp"
#include "fibreopt/invariants.hpp"
#include "fibreopt/run_config.hpp"
