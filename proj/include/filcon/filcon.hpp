#pragma once

#include "certify.hpp"
#include "config.hpp"
#include "expr.hpp"
#include "measures.hpp"
#include "observer.hpp"
#include "regularize.hpp"
#include "report.hpp"
#include "simulate.hpp"
#include "synth.hpp"
#include "systems.hpp"
