// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "rlvr/checkpoint.hpp"
#include "rlvr/core/error.hpp"
#include "rlvr/dataset.hpp"
#include "rlvr/evaluation.hpp"
#include "rlvr/llm/cache.hpp"
#include "rlvr/llm/client.hpp"
#include "rlvr/llm/templates.hpp"
#include "rlvr/llm/transport.hpp"
#include "rlvr/policy.hpp"
#include "rlvr/rl/advantage.hpp"
#include "rlvr/rl/distill.hpp"
#include "rlvr/rl/train.hpp"
#include "rlvr/rl/update.hpp"
#include "rlvr/toy.hpp"
#include "rlvr/verifiers.hpp"
