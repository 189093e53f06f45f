#pragma once

#include "wsrpso/errors.hpp"
#include "wsrpso/numerics.hpp"
#include "wsrpso/system_model.hpp"
#include "wsrpso/channel.hpp"
#include "wsrpso/link.hpp"
#include "wsrpso/bd.hpp"
#include "wsrpso/pso.hpp"
#include "wsrpso/harness.hpp"
