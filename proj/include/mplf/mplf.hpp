#pragma once

#include "mplf/types.hpp"
#include "mplf/netmodel.hpp"
#include "mplf/powerflow.hpp"
#include "mplf/newton.hpp"
#include "mplf/certify.hpp"
#include "mplf/linearize.hpp"
#include "mplf/analysis.hpp"
#include "mplf/io.hpp"
