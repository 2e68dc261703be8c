#pragma once

#include "coeba/checkpoint.hpp"
#include "coeba/common.hpp"
#include "coeba/config.hpp"
#include "coeba/eba.hpp"
#include "coeba/eval.hpp"
#include "coeba/graph.hpp"
#include "coeba/losses.hpp"
#include "coeba/model.hpp"
#include "coeba/synthetic.hpp"
#include "coeba/trainer.hpp"
