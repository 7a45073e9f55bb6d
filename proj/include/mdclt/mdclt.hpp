#pragma once

#include "mdclt/array_spec.hpp"
#include "mdclt/bounds.hpp"
#include "mdclt/charfn.hpp"
#include "mdclt/common.hpp"
#include "mdclt/config.hpp"
#include "mdclt/csv.hpp"
#include "mdclt/distances.hpp"
#include "mdclt/errors.hpp"
#include "mdclt/functionals.hpp"
#include "mdclt/gaussian.hpp"
#include "mdclt/marginal.hpp"
#include "mdclt/parallel.hpp"
#include "mdclt/proof_internals.hpp"
#include "mdclt/rng.hpp"
#include "mdclt/sampling.hpp"
