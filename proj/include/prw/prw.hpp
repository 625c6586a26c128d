#pragma once

#include "prw/classifier.hpp"
#include "prw/errors.hpp"
#include "prw/graft.hpp"
#include "prw/oracle.hpp"
#include "prw/parallel.hpp"
#include "prw/perturb.hpp"
#include "prw/serialize.hpp"
#include "prw/simulator.hpp"
#include "prw/tails.hpp"
#include "prw/transitions.hpp"
