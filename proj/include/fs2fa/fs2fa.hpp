#pragma once

#include "fs2fa/attacks.hpp"
#include "fs2fa/baselines.hpp"
#include "fs2fa/bytes.hpp"
#include "fs2fa/codec.hpp"
#include "fs2fa/costbench.hpp"
#include "fs2fa/crypto_core.hpp"
#include "fs2fa/device.hpp"
#include "fs2fa/errors.hpp"
#include "fs2fa/harness.hpp"
#include "fs2fa/policy.hpp"
#include "fs2fa/rng.hpp"
#include "fs2fa/scenarios.hpp"
#include "fs2fa/server.hpp"
#include "fs2fa/sim.hpp"
#include "fs2fa/store.hpp"
#include "fs2fa/trace.hpp"
#include "fs2fa/types.hpp"
