#ifndef VWS_VWS_HPP
#define VWS_VWS_HPP

#include "vws/common.hpp"
#include "vws/config.hpp"
#include "vws/estimates.hpp"
#include "vws/field.hpp"
#include "vws/flux.hpp"
#include "vws/io.hpp"
#include "vws/mask.hpp"
#include "vws/maximal.hpp"
#include "vws/random.hpp"
#include "vws/run.hpp"
#include "vws/solver.hpp"
#include "vws/truncation.hpp"
#include "vws/verify.hpp"
#include "vws/whitney.hpp"

#endif  // VWS_VWS_HPP
