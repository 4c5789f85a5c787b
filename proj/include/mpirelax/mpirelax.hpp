#pragma once

#include "mpirelax/cg.hpp"
#include "mpirelax/config.hpp"
#include "mpirelax/convolution.hpp"
#include "mpirelax/core_stage.hpp"
#include "mpirelax/deconv.hpp"
#include "mpirelax/error.hpp"
#include "mpirelax/fft.hpp"
#include "mpirelax/grid.hpp"
#include "mpirelax/interpolation.hpp"
#include "mpirelax/io.hpp"
#include "mpirelax/metrics.hpp"
#include "mpirelax/phantom.hpp"
#include "mpirelax/physics.hpp"
#include "mpirelax/pipeline.hpp"
#include "mpirelax/preprocess.hpp"
#include "mpirelax/relaxation.hpp"
#include "mpirelax/scan.hpp"
#include "mpirelax/simulate.hpp"
