#pragma once

// Everything, for callers that do not care about compile time.
#include "persuade/auction.hpp"
#include "persuade/config.hpp"
#include "persuade/core.hpp"
#include "persuade/gbm.hpp"
#include "persuade/ledger.hpp"
#include "persuade/market.hpp"
#include "persuade/pipeline.hpp"
#include "persuade/policy_eval.hpp"
#include "persuade/predictor.hpp"
#include "persuade/signal_design.hpp"
