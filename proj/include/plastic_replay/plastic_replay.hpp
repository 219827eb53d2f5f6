#pragma once

#include "plastic_replay/agent.hpp"
#include "plastic_replay/bucket_index.hpp"
#include "plastic_replay/config.hpp"
#include "plastic_replay/csv.hpp"
#include "plastic_replay/decay.hpp"
#include "plastic_replay/envs/chain.hpp"
#include "plastic_replay/envs/tabular_mdp.hpp"
#include "plastic_replay/error.hpp"
#include "plastic_replay/grama.hpp"
#include "plastic_replay/nn.hpp"
#include "plastic_replay/per.hpp"
#include "plastic_replay/replay_buffer.hpp"
#include "plastic_replay/rng.hpp"
#include "plastic_replay/samplers.hpp"
#include "plastic_replay/sampling.hpp"
#include "plastic_replay/stats.hpp"
#include "plastic_replay/sum_tree.hpp"
#include "plastic_replay/theory/bellman.hpp"
#include "plastic_replay/theory/decomposition.hpp"
#include "plastic_replay/theory/distribution.hpp"
#include "plastic_replay/theory/fqi.hpp"
#include "plastic_replay/theory/suboptimality.hpp"
