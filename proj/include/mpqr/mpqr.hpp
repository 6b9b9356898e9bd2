#pragma once

#include "mpqr/error.hpp"
#include "mpqr/half.hpp"
#include "mpqr/matrix.hpp"
#include "mpqr/gemm.hpp"
#include "mpqr/kernels.hpp"
#include "mpqr/io.hpp"
#include "mpqr/panel_qr.hpp"
#include "mpqr/recursive_qr.hpp"
#include "mpqr/lls.hpp"
#include "mpqr/matgen.hpp"
#include "mpqr/metrics.hpp"
