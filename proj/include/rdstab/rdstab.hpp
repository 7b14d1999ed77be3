#pragma once

#include "rdstab/error.hpp"
#include "rdstab/params.hpp"
#include "rdstab/quadrature.hpp"
#include "rdstab/spectral.hpp"
#include "rdstab/model.hpp"
#include "rdstab/control.hpp"
#include "rdstab/dde.hpp"
#include "rdstab/sim.hpp"
#include "rdstab/fd_oracle.hpp"
#include "rdstab/iss.hpp"
#include "rdstab/config.hpp"
#include "rdstab/sweep.hpp"
#include "rdstab/io.hpp"
#include "rdstab/svg.hpp"
#include "rdstab/cli.hpp"
