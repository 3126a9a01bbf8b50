#pragma once

#include "seqplace/classic.hpp"
#include "seqplace/config_file.hpp"
#include "seqplace/core.hpp"
#include "seqplace/eval.hpp"
#include "seqplace/ingest.hpp"
#include "seqplace/nn/adam.hpp"
#include "seqplace/nn/grad_check.hpp"
#include "seqplace/nn/linear.hpp"
#include "seqplace/nn/loss.hpp"
#include "seqplace/nn/lstm.hpp"
#include "seqplace/nn/plateau.hpp"
#include "seqplace/spl/checkpoint.hpp"
#include "seqplace/spl/model.hpp"
#include "seqplace/spl/train.hpp"
