#pragma once
/// \file sparsesph.hpp
/// Umbrella header.

#include "sparsesph/error.hpp"
#include "sparsesph/rng.hpp"
#include "sparsesph/geom.hpp"
#include "sparsesph/specfun.hpp"
#include "sparsesph/spectra.hpp"
#include "sparsesph/harmonic.hpp"
#include "sparsesph/model.hpp"
#include "sparsesph/reconstruct.hpp"
#include "sparsesph/io.hpp"
#include "sparsesph/image.hpp"
