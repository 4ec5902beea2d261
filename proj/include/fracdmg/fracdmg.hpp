#pragma once

#include "fracdmg/config.hpp"
#include "fracdmg/driver.hpp"
#include "fracdmg/energy.hpp"
#include "fracdmg/errors.hpp"
#include "fracdmg/fracops.hpp"
#include "fracdmg/io.hpp"
#include "fracdmg/plasticity.hpp"
