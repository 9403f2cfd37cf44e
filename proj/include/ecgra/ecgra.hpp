#pragma once

// Umbrella header for the ECG classification toolkit.

#include "ecgra/augment.hpp"
#include "ecgra/baseline.hpp"
#include "ecgra/checkpoint.hpp"
#include "ecgra/config.hpp"
#include "ecgra/csv.hpp"
#include "ecgra/dataset.hpp"
#include "ecgra/error.hpp"
#include "ecgra/gradcheck.hpp"
#include "ecgra/metrics.hpp"
#include "ecgra/model.hpp"
#include "ecgra/nn.hpp"
#include "ecgra/parallel.hpp"
#include "ecgra/recording.hpp"
#include "ecgra/rng.hpp"
#include "ecgra/tensor.hpp"
#include "ecgra/train.hpp"
#include "ecgra/wavelet.hpp"
