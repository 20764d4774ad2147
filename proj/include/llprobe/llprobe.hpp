#pragma once

// Everything at once.

#include "llprobe/errors.hpp"
#include "llprobe/random.hpp"
#include "llprobe/core.hpp"
#include "llprobe/oracle.hpp"
#include "llprobe/probe.hpp"
#include "llprobe/known_probes.hpp"
#include "llprobe/attack_full.hpp"
#include "llprobe/attack_subset.hpp"
#include "llprobe/io.hpp"
#include "llprobe/harness.hpp"
