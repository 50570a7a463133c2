#pragma once

#include "unmix/active_set.hpp"
#include "unmix/batch.hpp"
#include "unmix/csv.hpp"
#include "unmix/error.hpp"
#include "unmix/kkt.hpp"
#include "unmix/model.hpp"
#include "unmix/shift.hpp"
#include "unmix/verify.hpp"
