#pragma once

#include "sjlstm/actions.hpp"
#include "sjlstm/agents.hpp"
#include "sjlstm/checkpoint.hpp"
#include "sjlstm/config.hpp"
#include "sjlstm/corpus.hpp"
#include "sjlstm/metrics.hpp"
#include "sjlstm/model.hpp"
#include "sjlstm/nncore.hpp"
#include "sjlstm/parallel.hpp"
#include "sjlstm/reader.hpp"
#include "sjlstm/rng.hpp"
#include "sjlstm/synthetic.hpp"
#include "sjlstm/tensor.hpp"
#include "sjlstm/trainer.hpp"
