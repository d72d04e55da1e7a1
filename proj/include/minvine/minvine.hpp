#ifndef MINVINE_MINVINE_HPP
#define MINVINE_MINVINE_HPP

#include "minvine/basis.hpp"
#include "minvine/copula_grid.hpp"
#include "minvine/dataset.hpp"
#include "minvine/error.hpp"
#include "minvine/io.hpp"
#include "minvine/minfo_fit.hpp"
#include "minvine/nelder_mead.hpp"
#include "minvine/piecewise_polynomial.hpp"
#include "minvine/ranks.hpp"
#include "minvine/vine.hpp"

#endif  // MINVINE_MINVINE_HPP
