#pragma once

#include "calgeo/exterior.hpp"
#include "calgeo/subspace.hpp"
#include "calgeo/algebra.hpp"
#include "calgeo/parallel.hpp"
#include "calgeo/grassmann.hpp"
#include "calgeo/json_form.hpp"
#include "calgeo/catalog.hpp"
#include "calgeo/margin.hpp"
#include "calgeo/lp.hpp"
#include "calgeo/pshcheck.hpp"
#include "calgeo/cones.hpp"
#include "calgeo/convexity.hpp"
#include "calgeo/verify.hpp"

namespace calgeo {

#ifdef CALGEO_VERSION
inline constexpr const char* kVersion = CALGEO_VERSION;
#else
inline constexpr const char* kVersion = "0.1.0";
#endif

}  // namespace calgeo
