#pragma once

#include "reluflow/core.hpp"
#include "reluflow/rng.hpp"
#include "reluflow/dataset.hpp"
#include "reluflow/pattern.hpp"
#include "reluflow/objective.hpp"
#include "reluflow/partition.hpp"
#include "reluflow/landscape.hpp"
#include "reluflow/expsum.hpp"
#include "reluflow/flow.hpp"
#include "reluflow/criteria.hpp"
#include "reluflow/deep.hpp"
#include "reluflow/generators.hpp"
#include "reluflow/io.hpp"
#include "reluflow/scenario.hpp"
#include "reluflow/campaign.hpp"
