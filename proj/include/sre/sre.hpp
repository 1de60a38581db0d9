#pragma once

#include "sre/coefficients.hpp"
#include "sre/config.hpp"
#include "sre/entropy.hpp"
#include "sre/errors.hpp"
#include "sre/kernels.hpp"
#include "sre/lamperti.hpp"
#include "sre/paths.hpp"
#include "sre/slln.hpp"
#include "sre/studies.hpp"
#include "sre/version.hpp"
