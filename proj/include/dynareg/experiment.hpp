#pragma once

#include "dynareg/experiment/bench.hpp"
#include "dynareg/experiment/config.hpp"
#include "dynareg/experiment/output.hpp"
#include "dynareg/experiment/run.hpp"
