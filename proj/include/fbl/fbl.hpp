#pragma once

#include "fbl/error.hpp"
#include "fbl/fuzzy.hpp"
#include "fbl/fuzzy_json.hpp"
#include "fbl/dataset.hpp"
#include "fbl/param.hpp"
#include "fbl/probability.hpp"
#include "fbl/sampler.hpp"
#include "fbl/diagnostics.hpp"
#include "fbl/glm.hpp"
#include "fbl/datagen.hpp"
#include "fbl/models.hpp"
#include "fbl/optimize.hpp"
#include "fbl/config.hpp"
