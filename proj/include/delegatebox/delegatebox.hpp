#pragma once

#include "delegatebox/error.hpp"
#include "delegatebox/scalar.hpp"
#include "delegatebox/core.hpp"
#include "delegatebox/pandora.hpp"
#include "delegatebox/delegation.hpp"
#include "delegatebox/bounds.hpp"
#include "delegatebox/instances.hpp"
#include "delegatebox/io.hpp"
#include "delegatebox/repro.hpp"
