#pragma once

#include "trigpoly.hpp"
#include "norms.hpp"
#include "blocks.hpp"
#include "approx.hpp"
#include "sparse.hpp"
#include "almost_integer.hpp"
#include "flc.hpp"
#include "report.hpp"
#include "commands.hpp"
