#pragma once

#include "vnoether/errors.hpp"
#include "vnoether/symbol.hpp"
#include "vnoether/grassmann.hpp"
#include "vnoether/poly.hpp"
#include "vnoether/forms.hpp"
#include "vnoether/derivation.hpp"
#include "vnoether/variational.hpp"
#include "vnoether/gauge.hpp"
#include "vnoether/superpotential.hpp"
#include "vnoether/model.hpp"
#include "vnoether/serialize.hpp"
#include "vnoether/driver.hpp"
