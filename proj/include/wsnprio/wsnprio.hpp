#pragma once

#include "simcore.hpp"
#include "topology.hpp"
#include "traffic.hpp"
#include "queueing.hpp"
#include "mac.hpp"
#include "routing.hpp"
#include "metrics.hpp"
#include "network.hpp"
#include "svg.hpp"
#include "config.hpp"
#include "cli.hpp"
