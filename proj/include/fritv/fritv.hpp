#ifndef FRITV_FRITV_HPP
#define FRITV_FRITV_HPP

#include "fritv/annihilation.hpp"
#include "fritv/dft.hpp"
#include "fritv/io.hpp"
#include "fritv/manifest.hpp"
#include "fritv/mask.hpp"
#include "fritv/phantom.hpp"
#include "fritv/recon.hpp"
#include "fritv/types.hpp"

#endif // FRITV_FRITV_HPP
