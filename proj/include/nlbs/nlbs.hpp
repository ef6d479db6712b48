#pragma once

#include "nlbs/conformance.hpp"
#include "nlbs/errors.hpp"
#include "nlbs/families.hpp"
#include "nlbs/io.hpp"
#include "nlbs/model.hpp"
#include "nlbs/reduction.hpp"
#include "nlbs/solver.hpp"
