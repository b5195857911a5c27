#pragma once

#include "arith.hpp"
#include "archimedean.hpp"
#include "arithmetic_part.hpp"
#include "core_forms.hpp"
#include "errors.hpp"
#include "exp_sums.hpp"
#include "farey.hpp"
#include "harness.hpp"
#include "parallel.hpp"
#include "quadrature.hpp"
#include "rep_numbers.hpp"
