#pragma once

#include "aniso/error.hpp"
#include "aniso/grid.hpp"
#include "aniso/quadrature.hpp"
#include "aniso/bspline.hpp"
#include "aniso/field.hpp"
#include "aniso/polyspace.hpp"
#include "aniso/domain.hpp"
#include "aniso/spaces.hpp"
#include "aniso/approx.hpp"
#include "aniso/recovery.hpp"
#include "aniso/report.hpp"
