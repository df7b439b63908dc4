#pragma once

#include "dynareg/dynamic_dp.hpp"
#include "dynareg/eit/forward.hpp"
#include "dynareg/eit/io.hpp"
#include "dynareg/eit/mesh.hpp"
#include "dynareg/eit/phantom.hpp"
#include "dynareg/eit/reconstruction.hpp"
#include "dynareg/error.hpp"
#include "dynareg/operator_core.hpp"
#include "dynareg/random.hpp"
#include "dynareg/static_dp.hpp"
#include "dynareg/synthetic.hpp"
