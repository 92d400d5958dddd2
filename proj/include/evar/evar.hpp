#pragma once

#include "evar/adversary.hpp"
#include "evar/cli.hpp"
#include "evar/common.hpp"
#include "evar/finite_hyp.hpp"
#include "evar/json_io.hpp"
#include "evar/lp.hpp"
#include "evar/measure.hpp"
#include "evar/reduction.hpp"
#include "evar/sub_psi.hpp"
#include "evar/symmetry.hpp"
