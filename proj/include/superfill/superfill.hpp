#pragma once

#include "admm.hpp"
#include "bench.hpp"
#include "color.hpp"
#include "error.hpp"
#include "image_io.hpp"
#include "metrics.hpp"
#include "pipeline.hpp"
#include "sampling.hpp"
#include "slic.hpp"
#include "smoothing.hpp"
#include "svt.hpp"
#include "tensor.hpp"
#include "tproduct.hpp"
#include "transform.hpp"
