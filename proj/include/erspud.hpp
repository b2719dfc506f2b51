#pragma once

#include "erspud/candidates.hpp"
#include "erspud/densela.hpp"
#include "erspud/dictmetrics.hpp"
#include "erspud/error.hpp"
#include "erspud/l1lp.hpp"
#include "erspud/parallel.hpp"
#include "erspud/pipelines.hpp"
#include "erspud/randmodel.hpp"
#include "erspud/theorycheck.hpp"
#include "erspud/xphase.hpp"
